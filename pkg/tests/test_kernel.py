import itertools
import random

import numpy as np
import pytest
from scipy.stats import chisquare

from deckprob.deck import random_valid_deck
from deckprob.mc import kernel as kmod
from deckprob.mc._pykernel import MASK64, mix64, shuffle_plan, stream_key
from deckprob.mc.simulate import KernelDeck, Seeded, Shuffler, shuffle

needs_ext = pytest.mark.skipif(kmod.CKernel is None, reason="compiled kernel not built")


def test_splitmix_reference_outputs():
    # first two outputs of SplitMix64 seeded with 0
    assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert mix64(2 * 0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_stream_keys_distinct():
    keys = {stream_key(s, i) for s in range(20) for i in range(20)}
    assert len(keys) == 400


def test_shuffle_plan_bounds():
    ks, prods, threshs = shuffle_plan(60)
    for b in range(2, 61):
        k = ks[b]
        assert k >= 1 and prods[b] <= MASK64
        assert prods[b] == int(np.prod([b - t for t in range(k)], dtype=object))
        assert threshs[b] == (1 << 64) % prods[b]
        if b - k >= 2:
            assert prods[b] * (b - k) > MASK64


def test_selection_env():
    assert kmod.kernel_class(True) is kmod.PyKernel
    if kmod.CKernel is not None:
        assert kmod.kernel_class(False) is kmod.CKernel


def _protocol(kd, rng):
    targets = list(range(len(kd.targets)))
    prep_t = rng.choice(targets)
    prep_v = rng.randrange(len(kd.deck.target(kd.targets[prep_t]).values))
    steps = [rng.choice(targets) for _ in range(rng.randint(1, 4))]
    return prep_t, prep_v, steps


@needs_ext
@pytest.mark.parametrize("shuffle_last", [False, True])
def test_compiled_matches_python(shuffle_last):
    rng = random.Random(3)
    for trial in range(25):
        d = random_valid_deck(rng, rng.choice([2, 3, 4]), rng.choice([1, 2, 3]))
        kd = KernelDeck.build(d)
        prep_t, prep_v, steps = _protocol(kd, rng)
        loop = kd.loop_target(kd.targets[prep_t])
        radices = [len(d.target(kd.targets[s]).values) for s in steps]
        key = Seeded(trial, 2).key()
        results = []
        for K in (kmod.PyKernel, kmod.CKernel):
            kern = K(kd.labels, len(kd.targets), kd.templates, shuffle_last, key)
            counts = np.zeros(int(np.prod(radices)), dtype=np.int64)
            done = kern.run(300, prep_t, prep_v, loop, steps, radices, counts, 10_000)
            results.append((done, counts.tolist(), kern.words_used, kern.subdeck, kern.pending_top()))
        assert results[0] == results[1]


@needs_ext
def test_compiled_matches_python_external_bytes():
    d = random_valid_deck(random.Random(1), 3, 2)
    kd = KernelDeck.build(d)
    out = []
    for K in (kmod.PyKernel, kmod.CKernel):
        src = np.random.default_rng(0)
        kern = K(kd.labels, 2 + 1, kd.templates, False, 0, lambda: src.bytes(64))
        out.append([kern.observe(i % 3) for i in range(500)] + [kern.words_used])
    assert out[0] == out[1]


@needs_ext
def test_compiled_reports_entropy_failure():
    d = random_valid_deck(random.Random(1), 3, 2)
    kd = KernelDeck.build(d)

    def broken():
        raise OSError("gone")

    kern = kmod.CKernel(kd.labels, 3, kd.templates, False, 0, broken)
    counts = np.zeros(3, dtype=np.int64)
    done = kern.run(10, 0, 0, 1, [1], [3], counts, 1000)
    assert kern.entropy_failed and done < 10


def test_multiset_conservation_in_kernel(deck):
    kd = KernelDeck.build(deck)
    for K in {kmod.PyKernel, kmod.Kernel}:
        kern = K(kd.labels, len(kd.targets), kd.templates, False, 5)
        for i in range(200):
            t = i % len(kd.targets)
            o = kern.observe(t)
            got = sorted(kern.subdeck)
            assert got == sorted(kd.templates[t][o])


def test_shuffle_uniform_three_cards():
    sh = Shuffler(Seeded(2024))
    tally = {p: 0 for p in itertools.permutations("abc")}
    for _ in range(60_000):
        tally[tuple(sh.shuffle("abc"))] += 1
    assert chisquare(list(tally.values())).pvalue > 0.001


def test_shuffle_edges():
    assert shuffle(["x"], Seeded(1)) == ["x"]
    assert shuffle([], Seeded(1)) == []
    a = Shuffler(Seeded(9))
    b = Shuffler(Seeded(9))
    seq_a = [a.shuffle(range(10)) for _ in range(5)]
    assert seq_a == [b.shuffle(range(10)) for _ in range(5)]
    assert len({tuple(s) for s in seq_a}) > 1
    assert sorted(shuffle(list("aabbc"), Seeded(3))) == list("aabbc")


def test_pure_shuffle_matches_selected():
    assert Shuffler(Seeded(4), pure=True).shuffle(range(30)) == Shuffler(Seeded(4)).shuffle(range(30))
