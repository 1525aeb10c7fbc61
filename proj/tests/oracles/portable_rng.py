"""Pure-Python replica of the library's seeded streams.

Mirrors include/gsc/rng.hpp: std::mt19937_64 engines seeded by a
splitmix64-derived seed, 53-bit uniforms, and rejection-sampled bounded
integers. Used only by the oracle scripts that need the same fold or
resample draws as the C++ code.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

DOMAIN_CV_FOLDS = 1
DOMAIN_BOOTSTRAP = 2


def mix64(x):
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, domain, index):
    s = mix64(seed & MASK64)
    s = mix64(s ^ domain)
    return mix64(s ^ (index & MASK64))


class MT19937_64:
    n, m = 312, 156
    matrix_a = 0xB5026F5AA96619E9
    upper = 0xFFFFFFFF80000000
    lower = 0x7FFFFFFF

    def __init__(self, seed):
        self.mt = [0] * self.n
        self.mt[0] = seed & MASK64
        for i in range(1, self.n):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK64
        self.idx = self.n

    def _twist(self):
        mt = self.mt
        for i in range(self.n):
            x = (mt[i] & self.upper) | (mt[(i + 1) % self.n] & self.lower)
            xa = x >> 1
            if x & 1:
                xa ^= self.matrix_a
            mt[i] = mt[(i + self.m) % self.n] ^ xa
        self.idx = 0

    def __call__(self):
        if self.idx >= self.n:
            self._twist()
        x = self.mt[self.idx]
        self.idx += 1
        x ^= (x >> 29) & 0x5555555555555555
        x ^= (x << 17) & 0x71D67FFFEDA60000
        x ^= (x << 37) & 0xFFF7EEE000000000
        x ^= x >> 43
        return x & MASK64


class Stream:
    def __init__(self, seed, domain, index):
        self.engine = MT19937_64(derive_seed(seed, domain, index))

    def below(self, n):
        threshold = ((1 << 64) - n) % n
        while True:
            x = self.engine()
            if x >= threshold:
                return x % n

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


if __name__ == "__main__":
    # First output of std::mt19937_64 default seed 5489 per the C++ standard.
    assert MT19937_64(5489)() == 14514284786278117030
    print("ok")
