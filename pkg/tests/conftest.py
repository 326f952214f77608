import json

import numpy as np
import pytest

from moods.dataset import Dataset, save_csv


@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory):
    """Two overlapping 2-D Gaussians, 24 minority and 216 majority points, as a manifest on disk."""
    root = tmp_path_factory.mktemp("toy")
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(1.5, 1.0, size=(24, 2)), rng.normal(0.0, 1.0, size=(216, 2))])
    y = np.r_[np.ones(24, int), np.zeros(216, int)]
    save_csv(Dataset(X, y, minority_label="pos", majority_label="neg"), root / "toy.csv")
    (root / "toy.json").write_text(json.dumps({
        "name": "toy", "path": "toy.csv", "label_column": "label", "minority_label": "pos", "has_header": True}))
    return root / "toy.json"


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    table = item.config.stash[_CRITERIA]
    _, ok, details = table.get(n, (title, True, []))
    table[n] = (title, ok and rep.passed, details + ([detail] if detail and rep.when == "call" else []))


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash[_CRITERIA]
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        title, ok, details = table[n]
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
