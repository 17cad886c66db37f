import numpy as np
import pytest

from grasplab.config import TrainConfig
from grasplab.errors import CheckpointError
from grasplab.learner.checkpoint import load_checkpoint, save_checkpoint
from grasplab.learner.ddpg import DDPGAgent, load_agent, save_agent


def random_tensors(rng, count=5):
    tensors = []
    for i in range(count):
        ndim = int(rng.integers(1, 4))
        shape = tuple(int(rng.integers(1, 6)) for _ in range(ndim))
        tensors.append((f"tensor{i}/{'W' if i % 2 else 'b'}",
                        rng.normal(size=shape)))
    return tensors


def test_roundtrip_preserves_everything(tmp_path):
    rng = np.random.default_rng(0)
    tensors = random_tensors(rng)
    meta = {"format": "test", "note": "abc", "num": 3}
    path = tmp_path / "ck.bin"
    save_checkpoint(path, tensors, meta)
    back, meta2 = load_checkpoint(path)
    assert meta2 == meta
    assert [n for n, _ in back] == [n for n, _ in tensors]
    for (_, a), (_, b) in zip(back, tensors):
        assert a.shape == b.shape
        assert np.array_equal(a, b)


def test_write_read_write_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    for trial in range(100):
        tensors = random_tensors(rng, count=int(rng.integers(1, 6)))
        p1 = tmp_path / f"a{trial}.bin"
        p2 = tmp_path / f"b{trial}.bin"
        save_checkpoint(p1, tensors, {"trial": trial})
        back, meta = load_checkpoint(p1)
        save_checkpoint(p2, back, meta)
        assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_corruption_detected_by_digest(tmp_path):
    rng = np.random.default_rng(2)
    path = tmp_path / "ck.bin"
    save_checkpoint(path, random_tensors(rng), {"x": 1})
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF  # flip a payload bit
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_truncation_detected(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "ck.bin"
    save_checkpoint(path, random_tensors(rng), {"x": 1})
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_agent_roundtrip(tmp_path):
    cfg = TrainConfig(conv_channels=(2,), conv_kernel=3, conv_stride=2,
                      dense_units=(8,), q_factoring=2)
    agent = DDPGAgent.build((8, 8), 6, cfg, np.random.default_rng(4),
                            far_plane=2.0)
    path = tmp_path / "agent.bin"
    save_agent(path, agent, config_text_blob="horizon = 40\n")
    loaded, meta = load_agent(path)
    assert meta["config_text"] == "horizon = 40\n"
    for a, b in zip(agent.parameters_named(), loaded.parameters_named()):
        assert a[0] == b[0]
        assert np.array_equal(a[1], b[1])
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 2, size=(8, 8))
    flat = rng.uniform(0, 1, size=6)
    a_out = agent.policy_batch(img[None], flat[None])
    b_out = loaded.policy_batch(img[None], flat[None])
    assert np.array_equal(a_out, b_out)
