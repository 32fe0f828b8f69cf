import numpy as np
import pytest

from gandisc.checkpoint import ChecksumError, TopologyError, load_checkpoint, read_checkpoint, save_checkpoint
from gandisc.models import MlpSpec, SharingConfig, build_mgan, forward_classifier
from gandisc.numerics import Adam, SeededRng, no_grad

G = MlpSpec([2, 6, 2], activation="relu")
E = MlpSpec([2, 6, 6, 3])


def _save(path, s=1):
    sharing = SharingConfig(3, s)
    bank, disc, clf = build_mgan(G, E, 2, sharing, SeededRng(4))
    opt = Adam(disc.parameters())
    opt.step([np.ones_like(p.data) for p in disc.parameters()])
    save_checkpoint(path, bank, disc, clf, sharing, G, E, {"d": opt})
    return bank, disc, clf


def test_round_trip_bit_exact(tmp_path):
    p = tmp_path / "m.ckpt"
    bank, disc, clf = _save(p)
    bank2, disc2, clf2, sharing, header, opts = load_checkpoint(p)
    assert sharing == SharingConfig(3, 1)
    for a, b in zip(bank.parameters() + disc.parameters() + clf.parameters(),
                    bank2.parameters() + disc2.parameters() + clf2.parameters()):
        np.testing.assert_array_equal(a.data, b.data)
    assert disc2.extractor.layers[1] is clf2.extractor.layers[1]
    assert disc2.extractor.layers[2] is not clf2.extractor.layers[2]
    assert opts["d"]["t"] == 1
    x = SeededRng(0).normal(size=(4, 2))
    with no_grad():
        np.testing.assert_array_equal(forward_classifier(clf, x)[2].data, forward_classifier(clf2, x)[2].data)


def test_corrupted_block_detected(tmp_path):
    p = tmp_path / "m.ckpt"
    _save(p)
    raw = bytearray(p.read_bytes())
    raw[-20] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError, match="block"):
        read_checkpoint(p)


def test_topology_mismatch(tmp_path):
    p = tmp_path / "m.ckpt"
    _save(p, s=1)
    with pytest.raises(TopologyError):
        load_checkpoint(p, expect_sharing=SharingConfig(3, 2))
