"""Integer-only synthetic fixtures, mirrored bit-for-bit by `stereobench_core::synth`."""

import numpy as np

M32 = 0xFFFFFFFF


def mix32(h):
    h &= M32
    h ^= h >> 16
    h = (h * 0x7FEB352D) & M32
    h ^= h >> 15
    h = (h * 0x846CA68B) & M32
    h ^= h >> 16
    return h


def hash3(x, y, seed):
    return mix32(x ^ mix32((y + mix32(seed)) & M32))


def natural_image(height, width, seed):
    img = np.zeros((height, width, 3), dtype=np.uint8)
    for y in range(height):
        for x in range(width):
            tex = hash3(x, y, seed) % 25 - 12
            for c in range(3):
                a = (x * (3 + seed % 5) + y * (2 + c) + seed * 17 + c * 40) % 512
                tri = a if a < 256 else 511 - a
                v = tri * 5 // 8 + 48 + tex
                img[y, x, c] = min(max(v, 0), 255)
    return img


def distorted(img, seed, amp):
    h, w, _ = img.shape
    out = np.zeros_like(img)
    span = 2 * amp + 1
    for y in range(h):
        for x in range(w):
            for c in range(3):
                n = hash3(x, y * 3 + c, seed ^ 0x9E37) % span - amp
                out[y, x, c] = min(max(int(img[y, x, c]) + n, 0), 255)
    return out


def metric_pair_shape(i):
    return 24 + 3 * i, 32 + 5 * i
