"""Five-image sample directory: four detectable portrait variants plus one
blank frame."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from skimage import data


@pytest.fixture(scope="session")
def sample_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("sample_images")
    astro = data.astronaut()
    variants = {
        "face_a.png": astro,
        "face_b.png": np.asarray(
            Image.fromarray(astro).resize((640, 640), Image.BILINEAR)
        ),
        "face_c.png": astro[20:380, 100:420],
        "face_d.png": (astro * 0.7).astype(np.uint8),
        "blank.png": np.full((256, 256, 3), 200, np.uint8),
    }
    for name, arr in variants.items():
        Image.fromarray(arr).save(root / name)
    return root
