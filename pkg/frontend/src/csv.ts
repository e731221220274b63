/** Strict CSV reader for the simulator's output files.
 *
 * RFC 4180 quoting is accepted, but the writer side only quotes when forced,
 * so most files are plain. Schema problems fail loudly with the offending
 * column names; rows are never silently dropped or padded.
 */

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;
  const push = () => {
    record.push(field);
    field = "";
  };
  const endRecord = () => {
    push();
    records.push(record);
    record = [];
  };
  while (i < text.length) {
    const c = text[i];
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += c;
      i += 1;
      continue;
    }
    if (c === '"' && field === "") {
      inQuotes = true;
      i += 1;
    } else if (c === ",") {
      push();
      i += 1;
    } else if (c === "\r" && text[i + 1] === "\n") {
      endRecord();
      i += 2;
    } else if (c === "\n") {
      endRecord();
      i += 1;
    } else {
      field += c;
      i += 1;
    }
  }
  if (inQuotes) throw new Error("unterminated quoted field");
  if (field !== "" || record.length > 0) endRecord();

  const header = records.shift();
  if (!header || header.length === 0 || header.every((c) => c === "")) {
    throw new Error("empty CSV: no header row");
  }
  for (const [idx, row] of records.entries()) {
    if (row.length !== header.length) {
      throw new Error(
        `row ${idx + 2}: ${row.length} fields, header has ${header.length}`,
      );
    }
  }
  return { columns: header, rows: records };
}

/** A parsed table plus checked accessors, labeled with its source name. */
export class Frame {
  constructor(
    readonly name: string,
    readonly table: Table,
  ) {}

  get columns(): string[] {
    return this.table.columns;
  }

  get rows(): string[][] {
    return this.table.rows;
  }

  require(...cols: string[]): this {
    const missing = cols.filter((c) => !this.table.columns.includes(c));
    if (missing.length > 0) {
      throw new Error(
        `${this.name}: missing column(s): ${missing.join(", ")}; ` +
          `have: ${this.table.columns.join(", ")}`,
      );
    }
    return this;
  }

  colIndex(col: string): number {
    const idx = this.table.columns.indexOf(col);
    if (idx < 0) this.require(col);
    return idx;
  }

  cell(row: string[], col: string): string {
    const v = row[this.colIndex(col)];
    if (v === undefined) throw new Error(`${this.name}: short row`);
    return v;
  }

  num(row: string[], col: string): number {
    const raw = this.cell(row, col);
    if (raw === "") throw new Error(`${this.name}: empty numeric cell in ${col}`);
    const v = Number(raw);
    if (!Number.isFinite(v)) {
      throw new Error(`${this.name}: non-numeric value ${JSON.stringify(raw)} in ${col}`);
    }
    return v;
  }

  /** Distinct cell values of a column, in first-appearance order. */
  distinct(col: string): string[] {
    const seen = new Set<string>();
    const out: string[] = [];
    for (const row of this.rows) {
      const v = this.cell(row, col);
      if (!seen.has(v)) {
        seen.add(v);
        out.push(v);
      }
    }
    return out;
  }
}

export function loadFrame(name: string, text: string): Frame {
  const frame = new Frame(name, parseCsv(text));
  if (frame.rows.length === 0) {
    throw new Error(`${name}: no data rows`);
  }
  return frame;
}
