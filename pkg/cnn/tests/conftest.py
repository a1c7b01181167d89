import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from sphcnn import read_bank


def core_cli(*args):
    """Invoke the core package through its command-line interface."""
    result = subprocess.run([sys.executable, "-m", "haarsphere", *args],
                            capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"core CLI failed: {result.stderr}")
    return result.stdout


@pytest.fixture(scope="session")
def bank_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("bank") / "bank.txt"
    core_cli("export-filters", "--out", str(path))
    return path


@pytest.fixture(scope="session")
def bank(bank_path):
    return read_bank(bank_path)


@pytest.fixture(scope="session")
def digit_dataset(tmp_path_factory):
    """384 level-4 digit spheres with rate-0.2 noisy partners, split
    into train (334 spheres = 2004 faces) and test (50 spheres)."""
    root = tmp_path_factory.mktemp("digits")
    data = root / "all"
    core_cli("dataset", "--kind", "digits", "--count", "384", "--level", "4",
             "--out", str(data), "--seed", "0", "--rate", "0.2")
    train_dir = root / "train"
    test_dir = root / "test"
    for sub in ("clean", "noisy"):
        (train_dir / sub).mkdir(parents=True)
        (test_dir / sub).mkdir(parents=True)
        files = sorted((data / sub).iterdir())
        assert len(files) == 384
        for f in files[:334]:
            shutil.copy(f, train_dir / sub / f.name)
        for f in files[334:]:
            shutil.copy(f, test_dir / sub / f.name)
    return {"train": train_dir, "test": test_dir}


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Tiny level-3 synthetic set for fast training smoke tests."""
    root = tmp_path_factory.mktemp("small") / "data"
    core_cli("dataset", "--kind", "synthetic", "--count", "8", "--level", "3",
             "--coarse", "1", "--out", str(root), "--seed", "3",
             "--rate", "0.2")
    return root
