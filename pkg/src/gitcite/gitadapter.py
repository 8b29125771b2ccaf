"""Bind the citation model to real Git working trees.

The citation file lives at the worktree root (``citation.cite`` unless the
``GITCITE_FILE`` environment variable overrides the name) and is always
written in canonical form. Git is driven as a subprocess; the commands used
are listed in the README. The citation file is never merged by Git's own
line-based rules: merges go through :func:`merge_citation_files`.

Use one adapter flow per working tree: nothing here locks against
concurrent mutation of the same checkout. Network fetches and local reads
are safe to run concurrently.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import shutil
import subprocess
import urllib.error
import urllib.request
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DestinationCollision,
    EditConflict,
    FileMissing,
    HttpStatus,
    IoFailure,
    NetworkFailure,
    NoCommonAncestor,
    NotARepository,
    SubtreeMissing,
    UnknownVersion,
    UnresolvedConflict,
)
from .fileformat import parse, serialize
from .model import CitationFile, CitationRecord, TreeSnapshot, resolve
from .ops import RepositoryMetadata
from .paths import CanonicalPath, PathKind, from_rendered
from .store import ConflictReport, Resolver

logger = logging.getLogger(__name__)

DEFAULT_CITATION_FILE = "citation.cite"
CITATION_FILE_ENV = "GITCITE_FILE"

Rename = tuple[CanonicalPath, CanonicalPath]


def citation_file_name() -> str:
    return os.environ.get(CITATION_FILE_ENV) or DEFAULT_CITATION_FILE


def citation_file_path(worktree_root: Path | str) -> Path:
    return Path(worktree_root) / citation_file_name()


def load_citation_file(worktree_root: Path | str) -> CitationFile:
    """Parse the worktree's citation file.

    The file is maintained by the tool, not edited by hand; a document that
    parses but is not in canonical form is accepted with a warning, since it
    usually means someone modified it directly.
    """
    path = citation_file_path(worktree_root)
    if not path.is_file():
        raise FileMissing(f"no {citation_file_name()} at {worktree_root}")
    text = path.read_text(encoding="utf-8")
    cf = parse(text)
    if serialize(cf) != text:
        logger.warning("%s is not in canonical form; was it edited by hand?", path)
    return cf


def store_citation_file(worktree_root: Path | str, cf: CitationFile) -> None:
    """Write exactly the canonical bytes; equal inputs give identical files."""
    try:
        citation_file_path(worktree_root).write_text(serialize(cf), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {citation_file_name()}: {exc}") from exc


def sync_on_commit(
    worktree_root: Path | str,
    rename_map: Sequence[Rename] = (),
    deleted: Sequence[CanonicalPath] = (),
) -> CitationFile:
    """Carry the on-disk citation file through renames and deletions.

    ``rename_map`` and ``deleted`` come from the version-control system's
    change detection (see :func:`staged_changes`). Keys under a renamed path
    are rewritten by prefix substitution, then keys under deleted paths are
    pruned; the root entry always survives. The rewritten file is stored and
    returned.
    """
    cf = load_citation_file(worktree_root)
    for old, new in rename_map:
        cf = CitationFile({_rewrite_key(key, old, new): record for key, record in cf.items()})
    if deleted:
        cf = CitationFile(
            {
                key: record
                for key, record in cf.items()
                if key.is_root or not any(gone.covers(key) for gone in deleted)
            }
        )
    store_citation_file(worktree_root, cf)
    return cf


def _rewrite_key(key: CanonicalPath, old: CanonicalPath, new: CanonicalPath) -> CanonicalPath:
    if old.is_file:
        return new if key == old else key
    if key.is_within(old):
        return key.rebased(old, new)
    return key


def merge_citation_files(
    base: CitationFile,
    left: CitationFile,
    right: CitationFile,
    merged_tree: TreeSnapshot,
    resolver: Resolver | None = None,
) -> tuple[CitationFile, list[ConflictReport]]:
    """Three-way union of two branches' citation files.

    Keys on one side only are taken as-is. For keys on both sides, equal
    records merge silently; when exactly one side changed the record
    relative to ``base`` the changed side wins without a conflict; when both
    changed it the resolver decides. Entries whose paths are absent from
    ``merged_tree`` are pruned, the root excepted.
    """
    merged: dict[CanonicalPath, CitationRecord] = {}
    conflicts: list[ConflictReport] = []
    for key in sorted(set(left.keys()) | set(right.keys())):
        from_left, from_right = left.get(key), right.get(key)
        if from_left is None:
            merged[key] = from_right
            continue
        if from_right is None or from_left == from_right:
            merged[key] = from_left
            continue
        from_base = base.get(key)
        if from_base == from_left:
            merged[key] = from_right
        elif from_base == from_right:
            merged[key] = from_left
        else:
            report = ConflictReport(key=key, left=from_left, right=from_right)
            choice = resolver(report) if resolver is not None else None
            if choice is None:
                raise UnresolvedConflict(f"unresolved citation conflict at {key}")
            report.mark_resolved(choice)
            conflicts.append(report)
            merged[key] = choice
    pruned = {k: v for k, v in merged.items() if k.is_root or merged_tree.contains(k)}
    return CitationFile(pruned), conflicts


def fetch_remote_citation_file(url: str, timeout: float = 10.0) -> CitationFile:
    """GET ``url`` and parse the body as a citation-file document."""
    try:
        with urllib.request.urlopen(url, timeout=timeout) as response:
            body = response.read()
    except urllib.error.HTTPError as exc:
        raise HttpStatus(exc.code, url) from exc
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkFailure(f"cannot fetch {url}: {exc}") from exc
    return parse(body.decode("utf-8"))


# --- Git plumbing -----------------------------------------------------------


def _git(root: Path | str, *args: str, check: bool = True) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        ["git", "-C", str(root), *args],
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise IoFailure(f"git {' '.join(args)} failed: {proc.stderr.strip()}")
    return proc


def git_toplevel(path: Path | str) -> Path | None:
    proc = _git(path, "rev-parse", "--show-toplevel", check=False)
    if proc.returncode != 0:
        return None
    return Path(proc.stdout.strip())


def _has_head(root: Path | str) -> bool:
    return _git(root, "rev-parse", "--verify", "-q", "HEAD", check=False).returncode == 0


_ORIGIN_RE = re.compile(r"[:/]([^/:]+)/([^/:]+?)(?:\.git)?/?$")


def _parse_origin(url: str) -> tuple[str | None, str | None]:
    match = _ORIGIN_RE.search(url)
    if not match:
        return None, None
    return match.group(1), match.group(2)


def repo_metadata(path: Path | str) -> RepositoryMetadata:
    """Collect default-citation metadata from a local Git repository.

    Owner and repository name come from the origin URL when one is set,
    falling back to ``user.name`` and the worktree directory name. The
    locator is the origin URL or a ``file://`` URL of the worktree. Version
    id and date are the head commit's; contributors are the distinct commit
    authors, oldest first.
    """
    top = git_toplevel(path)
    if top is None:
        raise NotARepository(f"{path} is not inside a git repository")
    origin_proc = _git(top, "config", "--get", "remote.origin.url", check=False)
    origin = origin_proc.stdout.strip() if origin_proc.returncode == 0 else ""
    owner, repo_name = _parse_origin(origin) if origin else (None, None)
    if not owner:
        name_proc = _git(top, "config", "user.name", check=False)
        owner = name_proc.stdout.strip() if name_proc.returncode == 0 else ""
    if not repo_name:
        repo_name = top.name
    locator = origin or top.resolve().as_uri()
    commit_id = ""
    commit_date = ""
    contributors: tuple[str, ...] = ()
    if _has_head(top):
        commit_id = _git(top, "rev-parse", "--short", "HEAD").stdout.strip()
        commit_date = _git(top, "log", "-1", "--format=%cI").stdout.strip()
        seen: list[str] = []
        for author in _git(top, "log", "--reverse", "--format=%aN").stdout.splitlines():
            if author and author not in seen:
                seen.append(author)
        contributors = tuple(seen)
    return RepositoryMetadata(
        owner=owner,
        repo_name=repo_name,
        locator=locator,
        head_commit_id=commit_id,
        head_commit_date=commit_date,
        contributors=contributors,
    )


def snapshot_worktree(worktree_root: Path | str) -> TreeSnapshot:
    """Snapshot the working tree; ``.git`` and the citation file are not part
    of the cited tree. File digests are SHA-1 of content."""
    root = Path(worktree_root)
    skip = {citation_file_name()}
    snap = TreeSnapshot()
    for current, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d != ".git")
        rel = Path(current).relative_to(root)
        parts = () if rel == Path(".") else rel.parts
        if parts:
            snap = snap.with_dir(CanonicalPath(parts, PathKind.DIRECTORY))
        for filename in sorted(filenames):
            if not parts and filename in skip:
                continue
            digest = hashlib.sha1((Path(current) / filename).read_bytes()).hexdigest()
            snap = snap.with_file(CanonicalPath(parts + (filename,), PathKind.FILE), digest)
    return snap


def _tree_from_listing(lines: Iterable[tuple[str, str]]) -> TreeSnapshot:
    files = {}
    for rendered, digest in lines:
        if rendered == "/" + citation_file_name():
            continue
        files[rendered] = digest
    return TreeSnapshot.from_files(files)


def tree_from_index(root: Path | str) -> TreeSnapshot:
    """The staged file set, via ``git ls-files -s -z``; digests are blob ids."""
    out = _git(root, "ls-files", "-s", "-z").stdout
    entries = []
    for token in out.split("\0"):
        if not token:
            continue
        meta, path_text = token.split("\t", 1)
        blob = meta.split()[1]
        entries.append(("/" + path_text, blob))
    return _tree_from_listing(entries)


def tree_at_revision(root: Path | str, rev: str) -> TreeSnapshot:
    """The committed file set at ``rev``, via ``git ls-tree -r -z``."""
    proc = _git(root, "ls-tree", "-r", "-z", rev, check=False)
    if proc.returncode != 0:
        raise UnknownVersion(f"unknown revision {rev!r}")
    entries = []
    for token in proc.stdout.split("\0"):
        if not token:
            continue
        meta, path_text = token.split("\t", 1)
        blob = meta.split()[2]
        entries.append(("/" + path_text, blob))
    return _tree_from_listing(entries)


def citation_file_at_revision(root: Path | str, rev: str) -> CitationFile:
    proc = _git(root, "show", f"{rev}:{citation_file_name()}", check=False)
    if proc.returncode != 0:
        if _git(root, "rev-parse", "--verify", "-q", rev, check=False).returncode != 0:
            raise UnknownVersion(f"unknown revision {rev!r}")
        raise FileMissing(f"no {citation_file_name()} at revision {rev!r}")
    return parse(proc.stdout)


def staged_changes(root: Path | str) -> tuple[list[Rename], list[CanonicalPath]]:
    """Rename and delete lists for the staged state vs HEAD.

    Uses ``git diff --cached --name-status -M -z``. Git reports files only,
    so two directory-level facts are inferred on top. A complete, consistent
    directory move becomes a directory rename, letting directory citation
    keys follow by prefix (a partially moved directory stays file-by-file
    and a leftover directory key will show up in ``validate`` output).
    A directory with no staged files left under it counts as deleted, since
    the version-control system has no notion of an empty directory.
    """
    if not _has_head(root):
        return [], []
    out = _git(root, "diff", "--cached", "--name-status", "-M", "-z").stdout
    tokens = [t for t in out.split("\0")]
    renames: list[Rename] = []
    deleted: list[CanonicalPath] = []
    i = 0
    while i < len(tokens):
        status = tokens[i]
        if not status:
            i += 1
            continue
        code = status[0]
        if code in ("R", "C"):
            old, new = tokens[i + 1], tokens[i + 2]
            i += 3
            if code == "R":
                renames.append((from_rendered("/" + old), from_rendered("/" + new)))
        else:
            path_text = tokens[i + 1]
            i += 2
            if code == "D":
                deleted.append(from_rendered("/" + path_text))
    staged_files = {
        from_rendered("/" + t) for t in _git(root, "ls-files", "-z").stdout.split("\0") if t
    }
    dir_moves = _infer_directory_moves(renames, staged_files, deleted)
    gone_dirs = _infer_deleted_dirs(renames, staged_files, deleted)
    return dir_moves + renames, deleted + gone_dirs


def _infer_deleted_dirs(
    renames: Sequence[Rename],
    staged_files: set[CanonicalPath],
    deleted: Sequence[CanonicalPath],
) -> list[CanonicalPath]:
    candidates: set[CanonicalPath] = set()
    for path in [*deleted, *(old for old, _ in renames)]:
        for ancestor in path.ancestors():
            if not ancestor.is_root:
                candidates.add(ancestor)
    return sorted(d for d in candidates if not any(f.is_within(d) for f in staged_files))


def _infer_directory_moves(
    renames: Sequence[Rename],
    staged_files: set[CanonicalPath],
    deleted: Sequence[CanonicalPath],
) -> list[Rename]:
    candidates: list[Rename] = []
    seen: set[tuple[str, str]] = set()
    for old, new in renames:
        k = 0
        limit = min(len(old.segments), len(new.segments)) - 1
        while k < limit and old.segments[-(k + 1)] == new.segments[-(k + 1)]:
            k += 1
        if k == 0:
            continue
        old_prefix, new_prefix = old.segments[:-k], new.segments[:-k]
        if not old_prefix or not new_prefix or old_prefix == new_prefix:
            continue
        pair = (
            CanonicalPath(old_prefix, PathKind.DIRECTORY),
            CanonicalPath(new_prefix, PathKind.DIRECTORY),
        )
        tag = (str(pair[0]), str(pair[1]))
        if tag not in seen:
            seen.add(tag)
            candidates.append(pair)

    def complete_move(old_dir: CanonicalPath, new_dir: CanonicalPath) -> bool:
        if any(f.is_within(old_dir) for f in staged_files):
            return False  # something still lives under the old prefix
        if any(d.is_within(old_dir) for d in deleted):
            return False  # mixed move and delete; stay file-by-file
        return all(
            new == old.rebased(old_dir, new_dir)
            for old, new in renames
            if old.is_within(old_dir)
        )

    return [pair for pair in candidates if complete_move(*pair)]


# --- Higher-level worktree operations (used by the CLI) ---------------------


def run_merge(
    root: Path | str,
    other: str,
    resolver: Resolver | None,
    message: str | None = None,
) -> tuple[CitationFile, list[ConflictReport]]:
    """Citation-aware branch merge in a real worktree.

    Content files merge through ``git merge --no-commit --no-ff`` with
    leftover content conflicts resolved toward the current branch; the
    citation file is rebuilt from the base/ours/theirs documents instead of
    being text-merged, then the merge is committed.
    """
    root = Path(root)
    other_proc = _git(root, "rev-parse", "--verify", "-q", other, check=False)
    if other_proc.returncode != 0:
        raise UnknownVersion(f"unknown revision {other!r}")
    other_rev = other_proc.stdout.strip()
    head_rev = _git(root, "rev-parse", "HEAD").stdout.strip()
    base_proc = _git(root, "merge-base", head_rev, other_rev, check=False)
    if base_proc.returncode != 0:
        raise NoCommonAncestor(f"HEAD and {other!r} share no history")
    base_rev = base_proc.stdout.strip()
    if base_rev == other_rev:
        return load_citation_file(root), []  # nothing to merge
    if base_rev == head_rev:
        _git(root, "merge", "--ff-only", other_rev)
        return load_citation_file(root), []

    base_cf = citation_file_at_revision(root, base_rev)
    left_cf = citation_file_at_revision(root, head_rev)
    right_cf = citation_file_at_revision(root, other_rev)
    _git(root, "merge", "--no-commit", "--no-ff", other_rev, check=False)
    _resolve_content_conflicts(root)
    merged_tree = tree_from_index(root)
    merged_cf, conflicts = merge_citation_files(base_cf, left_cf, right_cf, merged_tree, resolver)
    store_citation_file(root, merged_cf)
    _git(root, "add", "-A")
    _git(root, "commit", "-m", message or f"Merge {other}")
    return merged_cf, conflicts


def _resolve_content_conflicts(root: Path) -> None:
    """Settle unmerged index entries by keeping the current branch's state."""
    tokens = _git(root, "status", "--porcelain", "-z").stdout.split("\0")
    i = 0
    while i < len(tokens):
        token = tokens[i]
        i += 1
        if len(token) < 4:
            continue
        status, path_text = token[:2], token[3:]
        if status and status[0] in ("R", "C"):
            i += 1  # rename/copy entries carry the original path as an extra token
            continue
        if "U" not in status and status not in ("AA", "DD"):
            continue
        if path_text == citation_file_name():
            continue  # rebuilt from the base/ours/theirs documents instead
        if _git(root, "checkout", "--ours", "--", path_text, check=False).returncode == 0:
            _git(root, "add", "--", path_text)
        else:  # no "ours" stage: the current branch had deleted it
            _git(root, "rm", "-f", "-q", "--ignore-unmatch", "--", path_text)


def run_copy(
    root: Path | str,
    src_root: Path | str,
    src_subtree: CanonicalPath,
    dst_path: CanonicalPath,
) -> tuple[CitationFile, list[CanonicalPath]]:
    """Copy a directory from another checkout and migrate its citations.

    Files are copied on disk; every explicit entry under the source subtree
    is added with its key rebased to the destination, and the destination
    directory gains the source subtree's resolved citation. Returns the new
    citation file and the added keys.
    """
    root, src_root = Path(root), Path(src_root)
    src_cf = load_citation_file(src_root)
    src_tree = snapshot_worktree(src_root)
    if not src_subtree.is_dir or not src_tree.contains(src_subtree):
        raise SubtreeMissing(f"{src_subtree} is not a directory of the source")
    if not dst_path.is_dir or dst_path.is_root:
        raise DestinationCollision(f"{dst_path} is not a valid destination directory")
    local_cf = load_citation_file(root)
    local_tree = snapshot_worktree(root)
    if local_tree.node_by_name(dst_path.segments) is not None:
        raise DestinationCollision(f"{dst_path} already exists")
    parent = dst_path.parent()
    if not local_tree.contains(parent):
        raise EditConflict(f"destination parent {parent} does not exist")

    src_fs = src_root / Path(*src_subtree.segments) if src_subtree.segments else src_root
    _copy_files(src_fs, root / Path(*dst_path.segments))

    entries = local_cf.as_dict()
    added: list[CanonicalPath] = []
    for key, record in src_cf.items():
        if key.is_within(src_subtree):
            moved = key.rebased(src_subtree, dst_path)
            entries[moved] = record
            added.append(moved)
    entries[dst_path] = resolve(src_cf, src_tree, src_subtree)
    if dst_path not in added:
        added.append(dst_path)
    merged = CitationFile(entries)
    store_citation_file(root, merged)
    return merged, sorted(added)


def _copy_files(src_dir: Path, dst_dir: Path) -> None:
    def ignore(directory: str, names: list[str]) -> set[str]:
        ignored = {".git"}
        if Path(directory) == src_dir:
            ignored.add(citation_file_name())
        return {n for n in names if n in ignored}

    shutil.copytree(src_dir, dst_dir, ignore=ignore)
