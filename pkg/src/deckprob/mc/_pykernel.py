"""Pure-Python trial kernel.

Bit-for-bit twin of ``_ckernel.pyx``: same generator, same batched shuffle,
same consumption order of random words. Used when the compiled extension is
not importable, and as the reference the compiled kernel is tested against.
"""

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, stream):
    return mix64(mix64(seed & MASK64) ^ ((stream * 0xD1B54A32D192ED03 + GAMMA) & MASK64))


def shuffle_plan(max_len):
    """Greedy grouping of the Durstenfeld bounds into 64-bit batches.

    For top bound ``b`` returns ``(k, product, threshold)`` meaning the next
    ``k`` swap indices (bounds ``b, b-1, ..., b-k+1``) are drawn from one
    64-bit word, rejected when the leftover is below ``threshold``.
    """
    ks = [0] * (max_len + 1)
    prods = [0] * (max_len + 1)
    threshs = [0] * (max_len + 1)
    for b in range(2, max_len + 1):
        k, prod = 0, 1
        while b - k >= 2 and prod * (b - k) <= MASK64:
            prod *= b - k
            k += 1
        ks[b], prods[b], threshs[b] = k, prod, (1 << 64) % prod
    return ks, prods, threshs


class Kernel:
    def __init__(self, labels, n_targets, templates, shuffle_last, key=0, entropy=None):
        # labels: flat list, labels[card * n_targets + target] -> outcome index
        # templates: templates[target][outcome] -> list of card ids
        self.labels = list(labels)
        self.n_targets = n_targets
        self.templates = [[list(t) for t in per] for per in templates]
        self.n_cards = len(self.labels) // n_targets
        self.shuffle_last = bool(shuffle_last)
        self.key = key & MASK64
        self.counter = 0
        self.entropy = entropy
        self._buf = b""
        self._pos = 0
        self.plan = shuffle_plan(max(self.n_cards, 2))
        self.words_used = 0
        self.entropy_failed = False
        self.reset()

    def reset(self):
        self.sub = list(range(self.n_cards))
        self.shuffled = False
        if self.shuffle_last:
            self._shuffle()

    def next64(self):
        self.words_used += 1
        if self.entropy is None:
            self.counter += 1
            return mix64(self.key + self.counter * GAMMA)
        if self._pos + 8 > len(self._buf):
            self._buf = self.entropy()
            self._pos = 0
        w = int.from_bytes(self._buf[self._pos:self._pos + 8], "little")
        self._pos += 8
        return w

    def _shuffle(self):
        a = self.sub
        ks, prods, threshs = self.plan
        i = len(a) - 1
        while i >= 1:
            b = i + 1
            k, th = ks[b], threshs[b]
            while True:
                r = self.next64()
                idx = []
                for t in range(k):
                    m = r * (b - t)
                    idx.append(m >> 64)
                    r = m & MASK64
                if r >= th:
                    break
            for t in range(k):
                j = idx[t]
                a[i - t], a[j] = a[j], a[i - t]
            i -= k
        self.shuffled = True

    def observe(self, target):
        if not self.shuffle_last:
            self._shuffle()
        top = self.sub[0]
        outcome = self.labels[top * self.n_targets + target]
        self.sub = list(self.templates[target][outcome])
        self.shuffled = False
        if self.shuffle_last:
            self._shuffle()
        return outcome

    @property
    def subdeck(self):
        return list(self.sub)

    def pending_top(self):
        return self.sub[0] if self.shuffled else None

    def run(self, n_trials, prep_target, prep_value, loop_target, steps, radices, counts, max_iter):
        """Run ``n_trials`` trials, adding outcome-code tallies into ``counts``.

        Returns the number of trials completed; fewer than ``n_trials`` means
        a preparation exceeded ``max_iter`` loop iterations.
        """
        for done in range(n_trials):
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    return done
                if loop_target >= 0:
                    self.observe(loop_target)
                if self.observe(prep_target) == prep_value:
                    break
            code = 0
            for s, r in zip(steps, radices):
                code = code * r + self.observe(s)
            counts[code] += 1
        return n_trials
