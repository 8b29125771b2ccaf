from __future__ import annotations

import subprocess
from pathlib import Path

import pytest


def git(root: Path, *args: str, check: bool = True) -> subprocess.CompletedProcess:
    proc = subprocess.run(["git", "-C", str(root), *args], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"git {' '.join(args)} failed:\n{proc.stderr}")
    return proc


def init_repo(root: Path, *, origin: str | None = None) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    git(root, "init", "-q", "-b", "main")
    git(root, "config", "user.name", "Ada Tester")
    git(root, "config", "user.email", "ada@example.com")
    git(root, "config", "commit.gpgsign", "false")
    if origin:
        git(root, "remote", "add", "origin", origin)
    return root


@pytest.fixture
def git_repo(tmp_path):
    """Factory for throwaway git repositories."""

    def make(name: str = "repo", origin: str | None = None) -> Path:
        return init_repo(tmp_path / name, origin=origin)

    return make
