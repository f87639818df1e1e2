"""Card-level Monte Carlo of the observation procedure.

Each stream is one physical system: a deck that is prepared, observed, and
prepared again, trial after trial. A trial runs the repeat-until preparation
loop and then the manifestation steps, recording the tuple of outcomes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import chi2_contingency

from deckprob.deck import CardType, Deck, require_valid
from deckprob.engine import EventStep, is_compatible, outcome_distribution, prepare, step as make_step
from deckprob.errors import DeckError, EntropyUnavailable, PreparationExhausted
from deckprob.mc.kernel import kernel_class
from deckprob.mc._pykernel import stream_key

DEFAULT_MAX_PREP = 10**6


# -- entropy -------------------------------------------------------------------


@dataclass(frozen=True)
class Seeded:
    """Counter-based stream: ``(seed, stream)`` fixes every word it yields."""

    seed: int
    stream: int = 0

    def key(self) -> int:
        return stream_key(self.seed, self.stream)

    def substream(self, i: int) -> "Seeded":
        return Seeded(self.seed, self.stream + i)


@dataclass(frozen=True)
class External:
    """Bytes from the OS generator, or from a device/file when ``path`` is set."""

    path: str | None = None
    chunk: int = 1 << 16

    def reader(self):
        if self.path is None:
            chunk = self.chunk
            return lambda: os.urandom(chunk)
        try:
            fh = open(self.path, "rb", buffering=0)
        except OSError as exc:
            raise EntropyUnavailable(f"cannot open entropy device {self.path}: {exc}") from None

        def read():
            data = fh.read(self.chunk)
            if not data or len(data) < 8:
                raise EntropyUnavailable(f"entropy device {self.path} returned a short read")
            return data

        return read

    def check(self) -> None:
        """Raise ``EntropyUnavailable`` unless 8 bytes can be read now."""
        if self.path is None:
            try:
                os.urandom(8)
            except (OSError, NotImplementedError) as exc:
                raise EntropyUnavailable(f"OS randomness unavailable: {exc}") from None
            return
        small = External(self.path, 8)
        small.reader()()

    def substream(self, i: int) -> "External":
        return self


EntropySource = Seeded | External


class SystemVariant(Enum):
    S = "s"  # shuffle, report, reconstruct
    SVI = "svi"  # same order, external entropy
    SVD = "svd"  # report, reconstruct, shuffle

    @property
    def shuffle_last(self) -> bool:
        return self is SystemVariant.SVD

    @property
    def value_determinate(self) -> bool:
        """Whether the next card (and so every variable's value) is fixed before an observation."""
        return self is SystemVariant.SVD

    def check_entropy(self, entropy: EntropySource) -> None:
        if self is SystemVariant.S and not isinstance(entropy, Seeded):
            raise ValueError("system S runs on a seeded stream")
        if self is SystemVariant.SVI and not isinstance(entropy, External):
            raise ValueError("system S_vi needs an external entropy source")

    @classmethod
    def parse(cls, text: str) -> "SystemVariant":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown variant {text!r}; choose s, svi or svd") from None


# -- deck -> kernel arrays ----------------------------------------------------


@dataclass(frozen=True)
class KernelDeck:
    deck: Deck
    cards: tuple[CardType, ...]  # physical cards, index = card id
    targets: tuple[str, ...]
    labels: tuple[int, ...]
    templates: tuple[tuple[tuple[int, ...], ...], ...]

    @classmethod
    def build(cls, deck: Deck) -> "KernelDeck":
        cards = tuple(deck.expanded())
        targets = deck.target_names
        labels = []
        for c in cards:
            for t in targets:
                labels.append(deck.target(t).values.index(deck.label(c, t)))
        templates = []
        for ti, t in enumerate(targets):
            per = []
            for oi in range(len(deck.target(t).values)):
                per.append(tuple(i for i in range(len(cards)) if labels[i * len(targets) + ti] == oi))
            templates.append(tuple(per))
        return cls(deck, cards, targets, tuple(labels), tuple(templates))

    def tindex(self, target: str) -> int:
        try:
            return self.targets.index(target)
        except ValueError:
            raise DeckError(f"unknown variable {target!r}") from None

    def vindex(self, target: str, value: str) -> int:
        values = self.deck.target(target).values
        if value not in values:
            raise DeckError(f"{value!r} is not a value of {target!r}")
        return values.index(value)

    def loop_target(self, prep_target: str) -> int:
        """Variable observed (and ignored) at the top of each preparation loop.

        The first other plain variable incompatible with the one the prep
        target reads, else the first other plain variable, else -1. A
        compatible choice can leave the loop unable to reach the target.
        """
        under = self.deck.underlying(prep_target)
        others = [v.name for v in self.deck.variables if v.name != under]
        for name in others:
            if not is_compatible(self.deck, under, name):
                return self.tindex(name)
        return self.tindex(others[0]) if others else -1

    def make_kernel(self, variant: SystemVariant, entropy: EntropySource, pure: bool | None = None):
        K = kernel_class(pure)
        if isinstance(entropy, Seeded):
            return K(self.labels, len(self.targets), self.templates, variant.shuffle_last, entropy.key())
        return K(self.labels, len(self.targets), self.templates, variant.shuffle_last, 0, entropy.reader())


def _kernel_deck(deck: Deck) -> KernelDeck:
    hit = _kd_cache.get(deck)
    if hit is None:
        if len(_kd_cache) > 64:
            _kd_cache.clear()
        hit = _kd_cache[deck] = KernelDeck.build(deck)
    return hit


_kd_cache: dict = {}


# -- frequency tables ----------------------------------------------------------


def _fmt_outcome(prep, targets, outcome) -> str:
    return f"{prep[0]}={prep[1]}; " + " & ".join(f"{t}={v}" for t, v in zip(targets, outcome))


@dataclass
class FrequencyTable:
    """Outcome-tuple tallies of one protocol with exact reference values."""

    prep: tuple[str, str]
    targets: tuple[str, ...]
    counts: dict[tuple[str, ...], int]
    exact: dict[tuple[str, ...], Fraction]
    n: int
    variant: str = ""
    extra: list = field(default_factory=list)  # (label, predicate steps) rows

    def freq(self, outcome: tuple[str, ...]) -> float:
        return self.counts.get(tuple(outcome), 0) / self.n

    def query(self, steps: Sequence[EventStep]) -> tuple[float, Fraction]:
        """Empirical and exact probability of the outcomes the step predicates admit."""
        if [s.target for s in steps] != list(self.targets):
            raise ValueError("query steps must manifest the table's targets in order")
        hits = [o for o in self.exact if all(s.outcome.admits(v) for s, v in zip(steps, o))]
        return sum(self.counts.get(o, 0) for o in hits) / self.n, sum((self.exact[o] for o in hits), Fraction(0))

    def stderr(self, p: Fraction | float) -> float:
        p = float(p)
        return math.sqrt(p * (1 - p) / self.n)

    def zscores(self) -> dict[tuple[str, ...], float]:
        out = {}
        for o, p in self.exact.items():
            se = self.stderr(p)
            d = self.freq(o) - float(p)
            out[o] = 0.0 if se == 0 and d == 0 else (math.inf if se == 0 else d / se)
        return out

    def within(self, sigmas: float = 4.0) -> bool:
        return all(abs(z) <= sigmas for z in self.zscores().values())

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        if (self.prep, self.targets) != (other.prep, other.targets):
            raise ValueError("cannot merge tables of different protocols")
        counts = Counter(self.counts)
        counts.update(other.counts)
        return FrequencyTable(self.prep, self.targets, dict(counts), self.exact, self.n + other.n,
                              self.variant, self.extra)

    def rows(self):
        """``(sequence, empirical, exact)`` per outcome tuple, then any query rows."""
        for o, p in self.exact.items():
            yield _fmt_outcome(self.prep, self.targets, o), self.freq(o), p
        for label, steps in self.extra:
            emp, p = self.query(steps)
            yield label, emp, p

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sequence", "empirical", "exact_num", "exact_den", "stderr"])
        for label, emp, p in self.rows():
            w.writerow([label, repr(emp), p.numerator, p.denominator, repr(self.stderr(p))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "prep": list(self.prep),
            "targets": list(self.targets),
            "n": self.n,
            "variant": self.variant,
            "rows": [
                {"outcome": list(o), "count": self.counts.get(o, 0), "exact": str(p)}
                for o, p in self.exact.items()
            ],
            "queries": [{"sequence": label, "steps": [str(s) for s in steps]} for label, steps in self.extra],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "FrequencyTable":
        def parse_step(text):
            t, rhs = text.split("=", 1)
            if rhs == "*":
                return make_step(t)
            if rhs.startswith("("):
                return make_step(t, rhs[1:-1].split("|"))
            return make_step(t, rhs)

        rows = data["rows"]
        return cls(
            tuple(data["prep"]),
            tuple(data["targets"]),
            {tuple(r["outcome"]): r["count"] for r in rows if r["count"]},
            {tuple(r["outcome"]): Fraction(r["exact"]) for r in rows},
            data["n"],
            data.get("variant", ""),
            [(q["sequence"], tuple(parse_step(s) for s in q["steps"])) for q in data.get("queries", [])],
        )

    @classmethod
    def from_json(cls, text: str) -> "FrequencyTable":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        strip = lambda c: {k: v for k, v in c.items() if v}  # noqa: E731
        return (
            (self.prep, self.targets, self.n, self.variant) == (other.prep, other.targets, other.n, other.variant)
            and strip(self.counts) == strip(other.counts)
            and self.exact == other.exact
            and [(a, tuple(map(str, b))) for a, b in self.extra] == [(a, tuple(map(str, b))) for a, b in other.extra]
        )


# -- protocol runner ------------------------------------------------------------


def _run_stream(kd: KernelDeck, variant, entropy, n, prep, targets, max_iter, pure):
    try:
        kern = kd.make_kernel(variant, entropy, pure)
    except EntropyUnavailable:
        raise
    except OSError as exc:
        raise EntropyUnavailable(str(exc)) from None
    radices = [len(kd.deck.target(t).values) for t in targets]
    counts = np.zeros(int(np.prod(radices)), dtype=np.int64)
    try:
        done = kern.run(
            n,
            kd.tindex(prep[0]),
            kd.vindex(*prep),
            kd.loop_target(prep[0]),
            [kd.tindex(t) for t in targets],
            radices,
            counts,
            max_iter,
        )
    except EntropyUnavailable:
        raise
    except OSError as exc:
        raise EntropyUnavailable(f"entropy source failed: {exc}") from None
    if kern.entropy_failed:
        raise EntropyUnavailable("entropy source failed during the run")
    if done < n:
        raise PreparationExhausted(
            f"preparation {prep[0]}={prep[1]} not reached within {max_iter} loop iterations"
        )
    return counts


def run_protocol(
    deck: Deck,
    prep: tuple[str, str],
    steps: Sequence[EventStep | str],
    n: int,
    variant: SystemVariant | str = SystemVariant.S,
    entropy: EntropySource | None = None,
    *,
    streams: int = 1,
    workers: int | None = None,
    max_prep_iterations: int = DEFAULT_MAX_PREP,
    pure: bool | None = None,
    label: str | None = None,
) -> FrequencyTable:
    """Simulate ``n`` trials and tally every outcome tuple of ``steps``.

    ``steps`` may be target names or ``EventStep``s; predicates on the steps
    only affect the extra query row, the kernel records full outcomes.
    Streams run on disjoint substreams of ``entropy`` and merge by addition.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    if isinstance(variant, str):
        variant = SystemVariant.parse(variant)
    if entropy is None:
        entropy = External() if variant is SystemVariant.SVI else Seeded(0)
    variant.check_entropy(entropy)
    if isinstance(entropy, External):
        entropy.check()
    require_valid(deck)
    steps = tuple(make_step(s) if isinstance(s, str) else s for s in steps)
    if not steps:
        raise ValueError("protocol needs at least one step")
    targets = tuple(s.target for s in steps)
    state = prepare(deck, *prep)  # also validates the prep value
    kd = _kernel_deck(deck)

    streams = max(1, min(streams, n))
    sizes = [n // streams + (1 if i < n % streams else 0) for i in range(streams)]
    jobs = [(kd, variant, entropy.substream(i), sizes[i], prep, targets, max_prep_iterations, pure)
            for i in range(streams)]
    if workers and workers > 1 and streams > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _run_stream(*a), jobs))
    else:
        parts = [_run_stream(*a) for a in jobs]
    total = np.sum(parts, axis=0)

    exact = outcome_distribution(state, targets)
    counts = {o: int(c) for o, c in zip(exact, total) if c}
    extra = []
    if any(s.outcome.members() is None or len(s.outcome.members()) > 1 for s in steps):
        extra.append((label or (f"{prep[0]}={prep[1]}; " + " & ".join(map(str, steps))), steps))
    return FrequencyTable(tuple(prep), targets, counts, exact, n, variant.value, extra)


# -- variant comparison -------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    tables: dict[str, FrequencyTable]
    max_abs_z: dict[str, float]
    chi2: float
    p_value: float
    sigmas: float
    alpha: float

    @property
    def within_tolerance(self) -> bool:
        return all(z <= self.sigmas for z in self.max_abs_z.values())

    @property
    def indistinguishable(self) -> bool:
        return self.p_value > self.alpha

    @property
    def ok(self) -> bool:
        return self.within_tolerance and self.indistinguishable


def variant_equivalence(
    deck: Deck,
    prep: tuple[str, str],
    steps: Sequence[EventStep | str],
    n: int,
    seed: int = 0,
    entropy_device: str | None = None,
    sigmas: float = 4.0,
    alpha: float = 1e-3,
) -> EquivalenceReport:
    """Run S, S_vi and S_vd on the same protocol and compare.

    S and S_vd consume the same generator words in the same order, so they
    get distinct streams here; sharing one would make their tallies identical.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    tables = {
        "s": run_protocol(deck, prep, steps, n, SystemVariant.S, Seeded(seed, 0)),
        "svi": run_protocol(deck, prep, steps, n, SystemVariant.SVI, External(entropy_device)),
        "svd": run_protocol(deck, prep, steps, n, SystemVariant.SVD, Seeded(seed, 1)),
    }
    outcomes = list(next(iter(tables.values())).exact)
    mat = np.array([[t.counts.get(o, 0) for o in outcomes] for t in tables.values()])
    mat = mat[:, mat.sum(axis=0) > 0]
    if mat.shape[1] < 2:
        chi2, p = 0.0, 1.0
    else:
        chi2, p, _, _ = chi2_contingency(mat)
    zmax = {k: max(abs(z) for z in t.zscores().values()) for k, t in tables.items()}
    return EquivalenceReport(tables, zmax, float(chi2), float(p), sigmas, alpha)


# -- single-system probes ------------------------------------------------------


class Trial:
    """One simulated system, stepped by hand."""

    def __init__(self, deck: Deck, variant: SystemVariant | str = SystemVariant.S,
                 entropy: EntropySource | None = None, pure: bool | None = None):
        if isinstance(variant, str):
            variant = SystemVariant.parse(variant)
        if entropy is None:
            entropy = External() if variant is SystemVariant.SVI else Seeded(0)
        variant.check_entropy(entropy)
        self.variant = variant
        self.kd = _kernel_deck(deck)
        self.kernel = self.kd.make_kernel(variant, entropy, pure)

    @property
    def deck(self) -> Deck:
        return self.kd.deck

    def observe(self, target: str) -> str:
        o = self.kernel.observe(self.kd.tindex(target))
        return self.deck.target(target).values[o]

    def prepare(self, target: str, value: str, max_iter: int = DEFAULT_MAX_PREP) -> int:
        """Repeat-until loop; returns the iteration count."""
        loop = self.kd.loop_target(target)
        self.kd.vindex(target, value)
        for it in range(1, max_iter + 1):
            if loop >= 0:
                self.kernel.observe(loop)
            if self.observe(target) == value:
                return it
        raise PreparationExhausted(f"{target}={value} not reached within {max_iter} iterations")

    @property
    def subdeck(self) -> Counter:
        return Counter(self.kd.cards[i] for i in self.kernel.subdeck)

    def pending_top(self) -> CardType | None:
        """The card the next observation will report, if already fixed."""
        top = self.kernel.pending_top()
        return None if top is None else self.kd.cards[top]

    def values_defined(self) -> dict[str, str | None]:
        """Value of every variable now, or None where no value exists yet."""
        top = self.pending_top()
        return {t: (None if top is None else self.deck.label(top, t)) for t in self.deck.target_names}


class Shuffler:
    """Uniform shuffles of an arbitrary sequence from one entropy stream."""

    def __init__(self, entropy: EntropySource, pure: bool | None = None):
        self.entropy = entropy
        self.pure = pure
        self._kernels: dict[int, object] = {}

    def _kernel(self, n):
        k = self._kernels.get(n)
        if k is None:
            K = kernel_class(self.pure)
            tmpl = ((tuple(range(n)),),)
            if isinstance(self.entropy, Seeded):
                k = K([0] * n, 1, tmpl, True, self.entropy.substream(n).key())
            else:
                k = K([0] * n, 1, tmpl, True, 0, self.entropy.reader())
            self._kernels[n] = k
        else:
            k.reset()
        return k

    def shuffle(self, items: Sequence) -> list:
        items = list(items)
        if len(items) < 2:
            return items
        return [items[i] for i in self._kernel(len(items)).subdeck]


def shuffle(items: Sequence, entropy: EntropySource) -> list:
    return Shuffler(entropy).shuffle(items)
