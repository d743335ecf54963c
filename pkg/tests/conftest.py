from __future__ import annotations

import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import constant_image, horizontal_gradient, make_scene  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"

PY = sys.executable or "python3"

_MOCK_SCRIPTS = {
    "echo.py": """\
        import shutil, sys
        shutil.copy(sys.argv[1], sys.argv[2])
    """,
    "check_files.py": """\
        import shutil, sys
        from pathlib import Path
        inp, mask, out, params = sys.argv[1:5]
        assert Path(inp).is_file(), "missing input"
        assert Path(mask).is_file(), "missing mask"
        text = Path(params).read_text()
        for key in ("strength=", "steps=", "guidance=", "prompt=",
                    "checkpoint=", "upscale=", "seed="):
            assert key in text, "missing " + key
        shutil.copy(inp, out)
    """,
    "fail.py": """\
        import sys
        print("synthetic backend explosion", file=sys.stderr)
        sys.exit(3)
    """,
    "no_output.py": """\
        import sys
        sys.exit(0)
    """,
    "corrupt_output.py": """\
        import sys
        from pathlib import Path
        Path(sys.argv[2]).write_text("definitely not a png")
    """,
    "half_dims.py": """\
        import sys
        from PIL import Image
        im = Image.open(sys.argv[1])
        im.resize((max(1, im.width // 2), max(1, im.height // 2))).save(sys.argv[2])
    """,
    "double_dims.py": """\
        import sys
        from PIL import Image
        im = Image.open(sys.argv[1])
        im.resize((im.width * 2, im.height * 2), Image.NEAREST).save(sys.argv[2])
    """,
    "sleepy.py": """\
        import time
        time.sleep(30)
    """,
}


@pytest.fixture(scope="session")
def scripts(tmp_path_factory) -> Path:
    """Directory of tiny stand-in external-backend programs."""
    d = tmp_path_factory.mktemp("mock_backends")
    for name, body in _MOCK_SCRIPTS.items():
        (d / name).write_text(textwrap.dedent(body))
    return d


@pytest.fixture
def scene_gray() -> np.ndarray:
    return make_scene(seed=11, h=96, w=96, color=False)


@pytest.fixture
def scene_color() -> np.ndarray:
    return make_scene(seed=12, h=96, w=96, color=True)


@pytest.fixture
def gradient() -> np.ndarray:
    return horizontal_gradient(64, 64)


@pytest.fixture
def flat_gray() -> np.ndarray:
    return constant_image(128, 32, 32, 1)


@pytest.fixture
def box_mask() -> np.ndarray:
    """64x64 mask with a 12x12 damaged square away from the border."""
    mask = np.zeros((64, 64), dtype=np.uint8)
    mask[20:32, 24:36] = 255
    return mask


@pytest.fixture
def ballots_csv() -> Path:
    return DATA_DIR / "ballots_fixture.csv"
