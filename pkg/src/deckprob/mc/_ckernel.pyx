# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial kernel; mirrors ``_pykernel.Kernel`` word for word."""

cimport cython
from libc.stdint cimport uint64_t, int64_t, int32_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

from deckprob.mc._pykernel import shuffle_plan

cdef extern from *:
    """
    #include <stdint.h>
    #define DP_GAMMA 0x9E3779B97F4A7C15ULL
    static inline uint64_t dp_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline uint64_t dp_mulhi(uint64_t a, uint64_t b, uint64_t *lo) {
        unsigned __int128 m = (unsigned __int128)a * b;
        *lo = (uint64_t)m;
        return (uint64_t)(m >> 64);
    }
    """
    uint64_t DP_GAMMA
    uint64_t dp_mix64(uint64_t z) nogil
    uint64_t dp_mulhi(uint64_t a, uint64_t b, uint64_t *lo) nogil

cdef enum:
    MAXK = 32


@cython.final
cdef class Kernel:
    cdef int32_t *labels
    cdef int32_t *tmpl_cards
    cdef int32_t *tmpl_off
    cdef int32_t *tmpl_len
    cdef int32_t *sub
    cdef int32_t *plan_k
    cdef uint64_t *plan_th
    cdef int n_targets, n_cards, max_out, sub_len
    cdef bint shuffle_last, external
    cdef public bint shuffled
    cdef uint64_t key, counter
    cdef public uint64_t words_used
    cdef object entropy, _buf
    cdef const unsigned char[:] _view
    cdef Py_ssize_t _pos, _len
    cdef public bint entropy_failed

    def __cinit__(self):
        self.labels = NULL
        self.tmpl_cards = NULL
        self.tmpl_off = NULL
        self.tmpl_len = NULL
        self.sub = NULL
        self.plan_k = NULL
        self.plan_th = NULL

    def __init__(self, labels, int n_targets, templates, shuffle_last, key=0, entropy=None):
        cdef Py_ssize_t i, t, o, pos
        labels = list(labels)
        self.n_targets = n_targets
        self.n_cards = len(labels) // n_targets
        self.max_out = max(len(per) for per in templates)
        self.labels = <int32_t *> malloc(len(labels) * sizeof(int32_t))
        for i in range(len(labels)):
            self.labels[i] = labels[i]
        total = sum(len(c) for per in templates for c in per)
        self.tmpl_cards = <int32_t *> malloc(max(total, 1) * sizeof(int32_t))
        self.tmpl_off = <int32_t *> malloc(n_targets * self.max_out * sizeof(int32_t))
        self.tmpl_len = <int32_t *> malloc(n_targets * self.max_out * sizeof(int32_t))
        pos = 0
        for t in range(n_targets):
            for o in range(self.max_out):
                cards = templates[t][o] if o < len(templates[t]) else []
                self.tmpl_off[t * self.max_out + o] = pos
                self.tmpl_len[t * self.max_out + o] = len(cards)
                for c in cards:
                    self.tmpl_cards[pos] = c
                    pos += 1
        self.sub = <int32_t *> malloc(max(self.n_cards, 1) * sizeof(int32_t))
        ks, prods, threshs = shuffle_plan(max(self.n_cards, 2))
        self.plan_k = <int32_t *> malloc(len(ks) * sizeof(int32_t))
        self.plan_th = <uint64_t *> malloc(len(ks) * sizeof(uint64_t))
        for i in range(len(ks)):
            self.plan_k[i] = ks[i]
            self.plan_th[i] = threshs[i]
        self.shuffle_last = bool(shuffle_last)
        self.key = key
        self.counter = 0
        self.words_used = 0
        self.entropy = entropy
        self.external = entropy is not None
        self.entropy_failed = False
        self._buf = b""
        self._view = self._buf
        self._pos = 0
        self._len = 0
        self.reset()

    def __dealloc__(self):
        free(self.labels)
        free(self.tmpl_cards)
        free(self.tmpl_off)
        free(self.tmpl_len)
        free(self.sub)
        free(self.plan_k)
        free(self.plan_th)

    def reset(self):
        cdef int i
        for i in range(self.n_cards):
            self.sub[i] = i
        self.sub_len = self.n_cards
        self.shuffled = False
        if self.shuffle_last:
            with nogil:
                self._shuffle()

    cdef void _refill(self) noexcept with gil:
        try:
            self._buf = bytes(self.entropy())
            if len(self._buf) < 8:
                raise OSError("short read from entropy source")
        except Exception:
            # run() reports the failure once the trial loop unwinds
            self.entropy_failed = True
            self._buf = bytes(4096)
        self._view = self._buf
        self._len = len(self._buf)
        self._pos = 0

    cdef uint64_t _next_external(self) noexcept nogil:
        cdef uint64_t w = 0
        cdef int b
        if self._pos + 8 > self._len:
            self._refill()
        for b in range(8):
            w |= (<uint64_t> self._view[self._pos + b]) << (8 * b)
        self._pos += 8
        return w

    cdef inline void _shuffle(self) noexcept nogil:
        # generator state is kept in locals: stores through `a` would
        # otherwise force reloads of the struct fields on every swap
        cdef int32_t *a = self.sub
        cdef int i = self.sub_len - 1
        cdef int b, k, t
        cdef uint64_t r, lo, th
        cdef uint64_t key = self.key
        cdef uint64_t ctr = self.counter
        cdef uint64_t used = 0
        cdef bint ext = self.external
        cdef uint64_t idx[MAXK]
        cdef int32_t tmp
        while i >= 1:
            b = i + 1
            k = self.plan_k[b]
            th = self.plan_th[b]
            while True:
                used += 1
                if ext:
                    r = self._next_external()
                    if self.entropy_failed:
                        # zero filler would be rejected forever; leave the deck as is
                        self.counter = ctr
                        self.words_used += used
                        return
                else:
                    ctr += 1
                    r = dp_mix64(key + ctr * DP_GAMMA)
                for t in range(k):
                    idx[t] = dp_mulhi(r, <uint64_t> (b - t), &lo)
                    r = lo
                if r >= th:
                    break
            for t in range(k):
                tmp = a[i - t]
                a[i - t] = a[idx[t]]
                a[idx[t]] = tmp
            i -= k
        self.counter = ctr
        self.words_used += used
        self.shuffled = True

    cdef inline int _observe(self, int target) noexcept nogil:
        cdef int outcome, slot
        if not self.shuffle_last:
            self._shuffle()
        outcome = self.labels[self.sub[0] * self.n_targets + target]
        slot = target * self.max_out + outcome
        self.sub_len = self.tmpl_len[slot]
        memcpy(self.sub, self.tmpl_cards + self.tmpl_off[slot], self.sub_len * sizeof(int32_t))
        self.shuffled = False
        if self.shuffle_last:
            self._shuffle()
        return outcome

    def observe(self, int target):
        return self._observe(target)

    def pending_top(self):
        return self.sub[0] if self.shuffled else None

    @property
    def subdeck(self):
        return [self.sub[i] for i in range(self.sub_len)]

    def run(self, int64_t n_trials, int prep_target, int prep_value, int loop_target,
            steps, radices, int64_t[:] counts, int64_t max_iter):
        cdef int n_steps = len(steps)
        cdef int32_t st[64]
        cdef int32_t rd[64]
        cdef int64_t done = 0, it, code
        cdef int s
        cdef bint capped = False
        if n_steps > 64:
            raise ValueError("at most 64 steps per trial")
        for s in range(n_steps):
            st[s] = steps[s]
            rd[s] = radices[s]
        with nogil:
            while done < n_trials:
                it = 0
                while True:
                    it += 1
                    if it > max_iter:
                        capped = True
                        break
                    if loop_target >= 0:
                        self._observe(loop_target)
                    if self._observe(prep_target) == prep_value:
                        break
                if capped or self.entropy_failed:
                    break
                code = 0
                for s in range(n_steps):
                    code = code * rd[s] + self._observe(st[s])
                counts[code] += 1
                done += 1
        return done
