import math
from collections import Counter

import pytest

from src.accel.config import AcceleratorConfig, InvalidFaultTargetError, uniform_formats
from src.faults.generator import eligible_registers, generate_fault, scope_bits
from src.faults.injector import activate, apply
from src.faults.spec import FaultError, FaultFilter, FaultSpec, UnsatisfiableFilterError
from src.fxp import FixedPointFormat, quantize
from src.nn.topology import LayerFormats, NetworkTopology


@pytest.fixture
def config():
    topology = NetworkTopology((8, 4, 2))
    return AcceleratorConfig(topology, 4, uniform_formats(topology, ["s0.d0.f16", "s1.d1.f14", "s1.d5.f10"]))


@pytest.fixture
def layered_config():
    topology = NetworkTopology((8, 4, 2))
    ir = FixedPointFormat(0, 0, 16)
    formats = [
        LayerFormats(ir, FixedPointFormat.parse("s1.d1.f14"), FixedPointFormat.parse("s1.d5.f10")),
        LayerFormats(ir, FixedPointFormat.parse("s1.d2.f13"), FixedPointFormat.parse("s1.d6.f9")),
    ]
    return AcceleratorConfig(topology, 4, formats)


def test_generation_is_reproducible(config):
    f = FaultFilter(count=3)
    assert generate_fault(11, 4, f, config) == generate_fault(11, 4, f, config)
    specs = {generate_fault(11, t, f, config) for t in range(20)}
    assert len(specs) > 1


def test_bit_sets_are_nested_and_sites_shared(config):
    specs = [generate_fault(2, 7, FaultFilter(count=k), config, "transient") for k in range(1, 9)]
    assert len({(s.register_class, s.index, s.cycle) for s in specs}) == 1
    for smaller, larger in zip(specs, specs[1:]):
        assert set(smaller.bits) < set(larger.bits)
    assert [len(s.bits) for s in specs] == list(range(1, 9))

    stuck = generate_fault(2, 7, FaultFilter(count=4), config, "stuck_at_0")
    assert (stuck.register_class, stuck.index, stuck.bits) == (
        specs[3].register_class, specs[3].index, specs[3].bits
    )
    assert stuck.cycle is None


def test_sign_component(config):
    for trial in range(10):
        spec = generate_fault(0, trial, FaultFilter(register_class="IMR", component="sign"), config)
        assert spec.bits == (15,)
    # IR words carry no sign bit
    with pytest.raises(UnsatisfiableFilterError):
        generate_fault(0, 0, FaultFilter(register_class="IR", component="sign"), config)
    with pytest.raises(UnsatisfiableFilterError):
        generate_fault(0, 0, FaultFilter(component="sign", count=2), config)


def test_component_bits_respected(config):
    for trial in range(20):
        spec = generate_fault(1, trial, FaultFilter(register_class="WR", component="fraction", count=3), config)
        assert all(b < 14 for b in spec.bits)
        spec = generate_fault(1, trial, FaultFilter(register_class="IMR", component="digit", count=2), config)
        assert all(10 <= b < 15 for b in spec.bits)


def test_layer_filter_bounds_the_cycle(config):
    window = config.layer_window(1)
    for trial in range(20):
        spec = generate_fault(3, trial, FaultFilter(layer=1), config, "transient")
        assert window[0] <= spec.cycle < window[1]
        assert spec.scope == "layer_1"
    with pytest.raises(UnsatisfiableFilterError):
        generate_fault(3, 0, FaultFilter(layer=2), config)


def test_accumulators_are_opt_in(config):
    plain = eligible_registers(FaultFilter(register_class="IMR"), config)
    extended = eligible_registers(FaultFilter(register_class="IMR", include_accumulators=True), config)
    assert len(plain) == 7
    assert len(extended) == 7 + 4


def test_spec_validation():
    with pytest.raises(FaultError):
        FaultSpec("transient", "IMR", 0, (1,))
    with pytest.raises(FaultError):
        FaultSpec("stuck_at_1", "IMR", 0, (1,), cycle=3)
    with pytest.raises(FaultError):
        FaultSpec("bit_flip", "IMR", 0, (1,))
    with pytest.raises(FaultError):
        FaultSpec("stuck_at_1", "ACC", 0, (1,))
    with pytest.raises(FaultError):
        FaultSpec("stuck_at_1", "IMR", 0, ())
    assert FaultSpec("stuck_at_1", "WR", 2, (5, 1, 5)).bits == (1, 5)


def test_spec_json():
    spec = FaultSpec("transient", "IMR", 3, (0, 4), layer=1, cycle=9)
    assert spec.to_dict() == {
        "kind": "transient", "class": "IMR", "index": 3, "bits": [0, 4], "scope": "layer_1", "cycle": 9,
    }
    assert FaultSpec.from_json(spec.to_json()) == spec
    with pytest.raises(FaultError):
        FaultSpec.from_dict({"kind": "transient", "class": "IMR"})
    with pytest.raises(FaultError):
        FaultSpec.from_dict({"kind": "stuck_at_0", "class": "IR", "index": 0, "bits": [1], "scope": "cycle_4"})


def test_activation_checks_targets(config):
    with pytest.raises(InvalidFaultTargetError):
        activate(FaultSpec("stuck_at_1", "IR", 4, (0,)), config)
    with pytest.raises(InvalidFaultTargetError):
        activate(FaultSpec("stuck_at_1", "WR", 0, (16,)), config)
    with pytest.raises(InvalidFaultTargetError):
        activate(FaultSpec("transient", "IMR", 0, (0,), layer=1, cycle=0), config)
    with pytest.raises(InvalidFaultTargetError):
        activate(FaultSpec("stuck_at_1", "IMR", 0, (0,), layer=5), config)
    # accumulators follow the 2P-1 tree registers
    assert activate(FaultSpec("stuck_at_1", "IMR", 7 + 3, (0,)), config).window == (0, config.cycles_for_inference())


def test_windows(config):
    transient = activate(FaultSpec("transient", "IMR", 0, (0,), cycle=5), config)
    assert transient.window == (5, 6)
    assert transient.active(5) and not transient.active(6)
    scoped = activate(FaultSpec("stuck_at_0", "IR", 0, (0,), layer=1), config)
    assert scoped.window == config.layer_window(1)


def test_apply_reports_changed_bits(config):
    fmt = FixedPointFormat.parse("s1.d5.f10")
    value = quantize(1.0, fmt)
    stuck = activate(FaultSpec("stuck_at_1", "IMR", 0, (10, 3)), config)
    corrupted, flipped = apply(stuck, value, 0)
    assert corrupted.raw == value.raw | (1 << 3)
    assert flipped == frozenset({3})

    flip = activate(FaultSpec("transient", "IMR", 0, (10,), cycle=2), config)
    corrupted, flipped = apply(flip, value, 2)
    assert corrupted.raw == 0
    assert flipped == frozenset({10})
    assert apply(flip, value, 3) == (value, frozenset())


def test_generation_is_uniform_over_registers_and_bits(config):
    trials = 3000
    cells = [(c, i) for c, i, _ in eligible_registers(FaultFilter(), config)]
    specs = [generate_fault(21, t, FaultFilter(), config) for t in range(trials)]
    by_register = Counter((s.register_class, s.index) for s in specs)
    by_bit = Counter(s.bits[0] for s in specs)

    for counts, keys in ((by_register, cells), (by_bit, range(16))):
        p = 1.0 / len(keys)
        sigma = math.sqrt(trials * p * (1.0 - p))
        for key in keys:
            assert abs(counts[key] - trials * p) <= 4 * sigma, key


def test_component_bits_hold_at_every_layer_in_scope(layered_config):
    formats = layered_config.formats
    assert scope_bits(formats, "IMR", "fraction") == tuple(range(9))
    assert scope_bits(formats, "IMR", "fraction", layer=0) == tuple(range(10))
    assert scope_bits(formats, "IMR", "digit") == (10, 11, 12, 13, 14)
    assert scope_bits(formats, "IMR", "digit", layer=1) == (9, 10, 11, 12, 13, 14)
    assert scope_bits(formats, "WR", "digit") == (14,)
    assert scope_bits(formats, "IMR", "sign") == (15,)
    assert scope_bits(formats, "IR", None) == tuple(range(16))

    for trial in range(200):
        spec = generate_fault(5, trial, FaultFilter(register_class="IMR", component="fraction", count=2), layered_config)
        assert all(b < 9 for b in spec.bits)
        spec = generate_fault(5, trial, FaultFilter(register_class="IMR", component="digit", layer=1), layered_config)
        assert 9 <= spec.bits[0] < 15

    with pytest.raises(UnsatisfiableFilterError):
        generate_fault(5, 0, FaultFilter(register_class="WR", component="digit", count=2), layered_config)
    assert generate_fault(5, 0, FaultFilter(register_class="WR", component="digit", count=2, layer=1), layered_config).bits == (13, 14)
