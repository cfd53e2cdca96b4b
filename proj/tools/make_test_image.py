"""Write the 256x256 RGB test image used by the image-completion acceptance run.

Source: scikit-image's `astronaut` sample (NASA, public domain), downsampled
by 2x2 averaging.
"""
import sys

import numpy as np
from skimage import data


def main(path):
    img = data.astronaut().astype(np.float64)
    small = img.reshape(256, 2, 256, 2, 3).mean(axis=(1, 3))
    out = np.clip(np.rint(small), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n256 256\n255\n")
        f.write(out.tobytes())


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/astronaut256.ppm")
