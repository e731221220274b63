"""Config grammar, validation errors, canonical round-trips, presets."""

import dataclasses

import pytest

from moeswitchsim.config import (
    COMBINE_WINDOW_DEFAULT,
    METHODS,
    SWEEP_AXES,
    ConfigError,
    ExperimentSpec,
    ModelConfig,
    SystemConfig,
    parse_config,
)
from moeswitchsim.presets import list_presets, preset_spec, preset_text

GOOD = """
[model]
preset = S
seq_len = 1024   ; override after preset

[system]
preset = dgx-h100
tlb_entries = 64

[run]
method = deepep
seed = 11
"""


def test_parse_applies_preset_then_overrides():
    spec = parse_config(GOOD)
    assert spec.model.name == "S" and spec.model.seq_len == 1024
    assert spec.system.n_gpu == 8 and spec.system.tlb_entries == 64
    assert spec.run.method == "deepep" and spec.run.seed == 11
    assert spec.sweep is None


def test_canonical_roundtrip_is_fixed_point():
    spec = parse_config(GOOD)
    text = spec.to_text()
    again = parse_config(text)
    assert again == spec
    assert again.to_text() == text
    assert again.config_hash() == spec.config_hash()


@pytest.mark.parametrize(
    "bad,frag",
    [
        ("[nope]\n", "unknown section"),
        ("[model]\nwat = 3\n", "unknown key"),
        ("[model]\nhidden 3\n", "expected 'key = value'"),
        ("x = 1\n", "outside any"),
        ("[model]\npreset = XXL\n", "unknown model preset"),
        ("[run]\npreset = foo\n", "has no presets"),
        ("[model]\nhidden = yes\n", "expects an integer"),
        ("[model]\nhidden = [1, 2\n", "unterminated list"),
        ("[model\n", "malformed section"),
        ("[run]\nmethod = warp\n", "unknown method"),
        ("[sweep]\naxis = hidden\nvalues = [1]\n", "unknown sweep axis"),
        ("[sweep]\naxis = topk\nvalues = []\n", "non-empty"),
    ],
)
def test_parse_errors_carry_line_context(bad, frag):
    with pytest.raises(ConfigError) as exc:
        parse_config(bad).validate()
    assert frag in str(exc.value)


def test_error_messages_name_the_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config("[model]\nhidden = 1\nbogus = 2\n")
    assert "line 3" in str(exc.value)


def test_validate_rejects_inconsistent_geometry():
    with pytest.raises(ConfigError):
        parse_config("[model]\npreset = S\n[system]\nn_gpu = 7\n")
    big_token = ExperimentSpec(
        model=ModelConfig(hidden=1 << 20, dtype_bytes=1),
        system=SystemConfig(reduction_buffer_bytes=65536),
    )
    with pytest.raises(ConfigError):
        big_token.validate()


def test_with_axis_covers_every_declared_axis():
    spec = ExperimentSpec()
    for axis in SWEEP_AXES:
        v = 2 if axis not in ("std", "alpha") else 0.5
        varied = spec.with_axis(axis, v)
        assert varied != spec
    with pytest.raises(ConfigError):
        spec.with_axis("hidden", 1)


def test_effective_combine_window_default_and_override():
    assert SystemConfig().effective_combine_window == COMBINE_WINDOW_DEFAULT
    assert SystemConfig(combine_window_bytes=4096).effective_combine_window == 4096


def test_method_table_is_frozen():
    assert METHODS == (
        "deepep",
        "nvls_workaround",
        "explicit",
        "comet_overlap",
        "dysharp_basic",
        "dysharp_comet",
        "fusion_only",
        "dysharp_full",
    )


def test_all_shipped_presets_parse_and_validate():
    names = list_presets()
    assert {"oracle", "fig11", "fig20", "fig21", "purecomm"} <= set(names)
    for name in names:
        spec = preset_spec(name)
        assert spec.validate() is spec
        assert "[model]" in preset_text(name) or "preset" in preset_text(name)


def test_unknown_preset_lists_alternatives():
    with pytest.raises(ConfigError) as exc:
        preset_text("figzz")
    assert "fig11" in str(exc.value)
