import glob
from pathlib import Path

import pytest

from sketchlab.draw import DrawRequest, draw_shape
from sketchlab.parser import parse

HERE = Path(__file__).parent
CORPUS_DIR = HERE / "corpus"
GOLDEN_DIR = HERE / "golden"

CORPUS_FILES = sorted(glob.glob(str(CORPUS_DIR / "*.little")))


def corpus_source(name: str) -> str:
    return (CORPUS_DIR / f"{name}.little").read_text(encoding="utf-8")


def golden_source(name: str) -> str:
    return (GOLDEN_DIR / f"{name}.little").read_text(encoding="utf-8")


@pytest.fixture
def fig1_program():
    return parse(golden_source("fig1"))


@pytest.fixture
def fig2_program():
    return parse(golden_source("fig2"))


@pytest.fixture
def fig3_program():
    return parse(golden_source("fig3"))


def draw_fig1():
    """Rebuild the overview drawing from an empty canvas (fixed seeds)."""
    p = parse("(blobs [])\n")
    p = draw_shape(p, DrawRequest("rect", [(31, 100), (216, 269)], color_seed=33))
    p = draw_shape(p, DrawRequest("line", [(81, 76), (190, 241)], color_seed=395))
    p = draw_shape(p, DrawRequest("line", [(56, 258), (101, 199)], color_seed=52))
    return p


@pytest.fixture
def corpus_programs():
    return {Path(f).stem: parse(open(f, encoding="utf-8").read()) for f in CORPUS_FILES}
