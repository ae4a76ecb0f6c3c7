"""Export scikit-learn's bundled 8x8 digits as IDX files.

The images are rescaled from 0..16 to 0..255 and split into a stratified
train/test pair with a fixed seed, so the output is reproducible.

    python scripts/export_digits_idx.py crates/core/tests/data/digits
"""

import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def write_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with path.open("wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path: Path, labels: np.ndarray) -> None:
    with path.open("wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "digits")
    out.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    images = np.rint(digits.images * 255.0 / 16.0)
    x_train, x_test, y_train, y_test = train_test_split(
        images, digits.target, train_size=1000, stratify=digits.target, random_state=0
    )
    write_images(out / "train-images.idx3-ubyte", x_train)
    write_labels(out / "train-labels.idx1-ubyte", y_train)
    write_images(out / "test-images.idx3-ubyte", x_test)
    write_labels(out / "test-labels.idx1-ubyte", y_test)
    print(f"train {len(y_train)}, test {len(y_test)} -> {out}")


if __name__ == "__main__":
    main()
