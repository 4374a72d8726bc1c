import numpy as np
import pytest

from disrank.checkpoint import load_checkpoint, save_checkpoint
from disrank.errors import FormatError, ValidationError
from disrank.nn import RegressionNet
from disrank.optim import adamw_init, adamw_step


def scrambled_net(seed=21, widths=(6, 5, 3), dropout_p=0.25):
    """A net with non-default parameters and running stats everywhere."""
    net = RegressionNet.create(widths, seed=seed, dropout_p=dropout_p)
    rng = np.random.default_rng(seed)
    for arr in net.parameters().values():
        arr += rng.standard_normal(arr.shape) * 0.1
    for name, arr in net.running_stats().items():
        arr += rng.uniform(0.1, 0.5, size=arr.shape)
    return net


def test_roundtrip_parameters_and_manifest(tmp_path):
    net = scrambled_net()
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "21", "note": "fixture"})
    loaded, manifest, optim_state = load_checkpoint(path)
    assert optim_state is None
    assert loaded.mode == "eval"
    assert manifest["note"] == "fixture"
    assert manifest["seed"] == "21"
    assert manifest["widths"] == "6,5,3,1"
    for name, arr in net.parameters().items():
        assert np.array_equal(arr, loaded.parameters()[name]), name
    for name, arr in net.running_stats().items():
        assert np.array_equal(arr, loaded.running_stats()[name]), name
    assert loaded.blocks[0].dropout.p == 0.25


def test_rewrite_is_byte_identical(tmp_path):
    net = scrambled_net(seed=4)
    p1, p2 = str(tmp_path / "a.nnck"), str(tmp_path / "b.nnck")
    save_checkpoint(p1, net, {"seed": "4"})
    loaded, manifest, _ = load_checkpoint(p1)
    save_checkpoint(p2, loaded, manifest)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_roundtrip_with_optimizer_state(tmp_path):
    net = scrambled_net(seed=9)
    params = net.parameters()
    state = adamw_init(params, 0.01)
    rng = np.random.default_rng(1)
    for _ in range(3):
        grads = {k: rng.standard_normal(p.shape) for k, p in params.items()}
        adamw_step(params, grads, state)
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "9"}, optim_state=state)
    _, _, loaded_state = load_checkpoint(path)
    assert loaded_state is not None
    assert loaded_state.step_count == 3
    for k in params:
        assert np.array_equal(loaded_state.m[k], state.m[k])
        assert np.array_equal(loaded_state.v[k], state.v[k])


def test_optim_rewrite_byte_identical(tmp_path):
    net = scrambled_net(seed=2)
    state = adamw_init(net.parameters(), 0.01)
    p1, p2 = str(tmp_path / "a.nnck"), str(tmp_path / "b.nnck")
    save_checkpoint(p1, net, {"seed": "2"}, optim_state=state)
    loaded, manifest, loaded_state = load_checkpoint(p1)
    save_checkpoint(p2, loaded, manifest, optim_state=loaded_state)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_bad_magic(tmp_path):
    net = scrambled_net()
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "0"})
    blob = bytearray(open(path, "rb").read())
    blob[:4] = b"WHAT"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(FormatError) as exc:
        load_checkpoint(path)
    assert exc.value.offset == 0


def test_truncation_detected_everywhere(tmp_path):
    net = scrambled_net()
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "0"})
    blob = open(path, "rb").read()
    for cut in (3, 5, 9, len(blob) // 2, len(blob) - 1):
        open(path, "wb").write(blob[:cut])
        with pytest.raises(FormatError):
            load_checkpoint(path)


def test_trailing_garbage_detected(tmp_path):
    net = scrambled_net()
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "0"})
    with open(path, "ab") as f:
        f.write(b"????")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_manifest_contradiction_rejected(tmp_path):
    net = scrambled_net()
    with pytest.raises(ValidationError, match="contradicts"):
        save_checkpoint(str(tmp_path / "n.nnck"), net, {"widths": "9,9,1"})


def test_forward_agreement_after_roundtrip(tmp_path):
    net = scrambled_net(seed=33)
    path = str(tmp_path / "net.nnck")
    save_checkpoint(path, net, {"seed": "33"})
    loaded, _, _ = load_checkpoint(path)
    x = np.random.default_rng(5).standard_normal((4, 6))
    net.eval_mode()
    assert np.array_equal(net.forward(x)[0], loaded.forward(x)[0])
