"""Builds the bundled 128x128 grayscale evaluation suite (8-bit binary PGM).

Natural crops come from scikit-image's public-domain / CC0 sample images;
the remaining images are deterministic piecewise-smooth synthetics.
"""
import os
import numpy as np
from skimage import data, color, transform

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "bench", "data", "suite")


def gray(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    img = img.astype(np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    return img


def crop(img, r, c, size):
    patch = img[r:r + size, c:c + size]
    return transform.resize(patch, (128, 128), anti_aliasing=True)


def save(name, img):
    img = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    with open(os.path.join(OUT, name + ".pgm"), "wb") as f:
        f.write(b"P5\n128 128\n255\n")
        f.write(img.tobytes())


def synthetics():
    yy, xx = np.mgrid[0:128, 0:128] / 127.0
    a = 0.2 + 0.5 * xx
    a[(xx - 0.5) ** 2 + (yy - 0.45) ** 2 < 0.08] = 0.85
    a[(yy > 0.7) & (xx > 0.15) & (xx < 0.6)] = 0.1
    b = 0.3 + 0.4 * np.sin(6 * np.pi * xx) * (yy < 0.5) + 0.2 * (yy >= 0.5)
    b += 0.3 * ((xx + yy) > 1.2)
    rng = np.random.default_rng(12345)
    c = np.full((128, 128), 0.15)
    for _ in range(14):
        r0, c0 = rng.integers(8, 120, 2)
        h, w = rng.integers(6, 40, 2)
        c[r0:r0 + h, c0:c0 + w] = rng.uniform(0.2, 0.95)
    d = 0.5 + 0.35 * np.cos(20 * np.pi * ((xx - 0.5) ** 2 + (yy - 0.5) ** 2))
    d[yy < 0.25] = 0.2 + 0.6 * xx[yy < 0.25]
    return [np.clip(v, 0, 1) for v in (a, b, c, d)]


def main():
    os.makedirs(OUT, exist_ok=True)
    save("01_camera", crop(gray(data.camera()), 60, 180, 256))
    save("02_astronaut", crop(gray(data.astronaut()), 20, 140, 256))
    save("03_coins", crop(gray(data.coins()), 20, 40, 200))
    save("04_page", crop(gray(data.page()), 0, 100, 191))
    save("05_coffee", crop(gray(data.coffee()), 60, 200, 256))
    save("06_brick", crop(gray(data.brick()), 100, 100, 256))
    for i, img in enumerate(synthetics()):
        save("%02d_synthetic_%d" % (7 + i, i + 1), img)


if __name__ == "__main__":
    main()
