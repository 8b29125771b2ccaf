"""In-memory version DAG with citation-carrying operators.

This is the reference semantics for how citation files travel through
commits, branches, copies between repositories, merges, and forks. History
is append-only: versions are immutable once created, and every operation
leaves the head citation file consistent with the head tree.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import (
    BranchExists,
    DestinationCollision,
    EditConflict,
    InvariantBroken,
    NoCommonAncestor,
    SourceVersionUnknown,
    SubtreeMissing,
    UnknownBranch,
    UnknownVersion,
    UnresolvedConflict,
)
from .model import CitationFile, CitationRecord, TreeSnapshot, resolve, validate
from .ops import CiteEdit, CiteEditKind
from .paths import CanonicalPath

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Version:
    """One commit node: at most two parents, a tree, and a citation file."""

    id: str
    parents: tuple[str, ...]
    tree: TreeSnapshot
    cf: CitationFile
    timestamp: int


class TreeEditKind(enum.Enum):
    CREATE_FILE = "create_file"
    DELETE = "delete"
    RENAME = "rename"
    MODIFY_CONTENT = "modify_content"


@dataclass(frozen=True)
class TreeEdit:
    """One structural edit applied by a commit."""

    kind: TreeEditKind
    path: CanonicalPath
    to: CanonicalPath | None = None
    digest: str = ""

    def __post_init__(self) -> None:
        if self.kind is TreeEditKind.RENAME:
            if self.to is None:
                raise ValueError("rename edits carry both endpoints")
            if self.path.is_root or self.to.is_root:
                raise ValueError("the root cannot be renamed")
            if self.path.is_dir != self.to.is_dir:
                raise ValueError("rename endpoints must have the same kind")
        else:
            if self.to is not None:
                raise ValueError(f"{self.kind.value} edits carry a single path")
            if self.kind is TreeEditKind.DELETE and self.path.is_root:
                raise ValueError("the root cannot be deleted")
            if self.kind in (TreeEditKind.CREATE_FILE, TreeEditKind.MODIFY_CONTENT) and not self.path.is_file:
                raise ValueError(f"{self.kind.value} needs a file path")

    @classmethod
    def create(cls, path: CanonicalPath, digest: str = "") -> "TreeEdit":
        return cls(TreeEditKind.CREATE_FILE, path, digest=digest)

    @classmethod
    def delete(cls, path: CanonicalPath) -> "TreeEdit":
        return cls(TreeEditKind.DELETE, path)

    @classmethod
    def rename(cls, path: CanonicalPath, to: CanonicalPath) -> "TreeEdit":
        return cls(TreeEditKind.RENAME, path, to=to)

    @classmethod
    def modify(cls, path: CanonicalPath, digest: str) -> "TreeEdit":
        return cls(TreeEditKind.MODIFY_CONTENT, path, digest=digest)


@dataclass
class ConflictReport:
    """Two branches cite the same key with different records."""

    key: CanonicalPath
    left: CitationRecord
    right: CitationRecord
    resolution: str = "pending"  # pending | chose_left | chose_right | replaced
    record: CitationRecord | None = None

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ValueError("a conflict needs two differing records")

    def mark_resolved(self, record: CitationRecord) -> None:
        self.record = record
        if record == self.left:
            self.resolution = "chose_left"
        elif record == self.right:
            self.resolution = "chose_right"
        else:
            self.resolution = "replaced"


Resolver = Callable[[ConflictReport], "CitationRecord | None"]


def choose_left(report: ConflictReport) -> CitationRecord:
    return report.left


def choose_right(report: ConflictReport) -> CitationRecord:
    return report.right


def scripted_resolver(choices: Mapping[str, "str | CitationRecord"]) -> Resolver:
    """Resolver driven by a rendered-path -> "left" | "right" | record table."""

    def _resolve(report: ConflictReport) -> CitationRecord | None:
        choice = choices.get(str(report.key))
        if choice == "left":
            return report.left
        if choice == "right":
            return report.right
        if isinstance(choice, CitationRecord):
            return choice
        return None

    return _resolve


class Repository:
    """A DAG of versions plus named branches and per-branch staged edits.

    Mutation (commit, branch, merge) needs exclusive access; committed
    versions are immutable, so concurrent reads are always safe.
    """

    def __init__(self, repo_id: str, default_branch: str = "main"):
        self.id = repo_id
        self.default_branch = default_branch
        self.versions: dict[str, Version] = {}
        self.branches: dict[str, str] = {}
        self.staged: dict[str, list[CiteEdit]] = {}
        self._clock = 0

    @classmethod
    def create(
        cls,
        repo_id: str,
        root_record: CitationRecord,
        tree: TreeSnapshot | None = None,
        branch: str = "main",
    ) -> "Repository":
        """A repository with one initial version citing only the root."""
        repo = cls(repo_id, default_branch=branch)
        version = repo._new_version((), tree or TreeSnapshot(), CitationFile.single(root_record))
        repo.branches[branch] = version.id
        repo.staged[branch] = []
        return repo

    def head_id(self, branch: str) -> str:
        try:
            return self.branches[branch]
        except KeyError:
            raise UnknownBranch(f"no branch {branch!r} in {self.id}") from None

    def head(self, branch: str) -> Version:
        return self.versions[self.head_id(branch)]

    def version(self, version_id: str) -> Version:
        try:
            return self.versions[version_id]
        except KeyError:
            raise UnknownVersion(f"no version {version_id!r} in {self.id}") from None

    def _new_version(self, parents: tuple[str, ...], tree: TreeSnapshot, cf: CitationFile) -> Version:
        issues = validate(cf, tree)
        if issues:
            raise InvariantBroken("; ".join(str(i) for i in issues))
        self._clock += 1
        version = Version(f"v{self._clock}", parents, tree, cf, self._clock)
        self.versions[version.id] = version
        return version

    def commit(
        self,
        branch: str,
        tree_edits: Iterable[TreeEdit] = (),
        cite_edits: Iterable[CiteEdit] = (),
    ) -> Version:
        """Advance ``branch`` by one version.

        The new citation file is the head's with, in order: the staged
        citation edits applied; every key under a renamed path rewritten by
        prefix substitution; every key whose path left the tree removed. The
        root entry always survives.
        """
        head = self.head(branch)
        tree_edits = list(tree_edits)
        tree = head.tree
        for edit in tree_edits:
            tree = _apply_tree_edit(tree, edit)
        entries = head.cf.as_dict()
        for edit in cite_edits:
            if edit.kind is CiteEditKind.DELETE:
                entries.pop(edit.path, None)
            else:
                entries[edit.path] = edit.record
        cf = CitationFile(entries)
        for edit in tree_edits:
            if edit.kind is TreeEditKind.RENAME:
                cf = rewrite_keys(cf, edit.path, edit.to)
        cf = CitationFile({k: v for k, v in cf.items() if k.is_root or tree.contains(k)})
        version = self._new_version((head.id,), tree, cf)
        self.branches[branch] = version.id
        return version

    def commit_staged(self, branch: str, tree_edits: Iterable[TreeEdit] = ()) -> Version:
        """Commit, consuming the branch's staged citation edits."""
        edits = self.staged.get(branch, [])
        self.staged[branch] = []
        return self.commit(branch, tree_edits, edits)

    def add_branch(self, name: str, from_version: str) -> str:
        if name in self.branches:
            raise BranchExists(f"branch {name!r} already exists")
        self.version(from_version)  # existence check
        self.branches[name] = from_version
        self.staged[name] = []
        return name

    def ancestor_ids(self, version_id: str) -> set[str]:
        """The version and every transitive parent."""
        seen: set[str] = set()
        queue = [version_id]
        while queue:
            current = queue.pop()
            if current in seen:
                continue
            seen.add(current)
            queue.extend(self.version(current).parents)
        return seen

    def merge_base(self, a: str, b: str) -> str | None:
        common = self.ancestor_ids(a) & self.ancestor_ids(b)
        if not common:
            return None
        return max(common, key=lambda vid: self.versions[vid].timestamp)

    def merge(
        self,
        into_branch: str,
        from_branch: str,
        resolver: Resolver | None = None,
    ) -> tuple[Version, list[ConflictReport]]:
        """Merge ``from_branch`` into ``into_branch``, citations included.

        Trees merge by simplified three-way rules (a both-sides content
        conflict keeps the into-branch's state, with a warning). The merged
        citation file is the union of both heads' entries: a key changed on
        one side only takes the changed record; a key changed on both sides
        to different records is reported to the resolver; entries whose paths
        left the merged tree are pruned.
        """
        into_id = self.head_id(into_branch)
        from_id = self.head_id(from_branch)
        if into_id == from_id:
            return self.version(into_id), []
        base_id = self.merge_base(into_id, from_id)
        if base_id is None:
            raise NoCommonAncestor(f"{into_branch!r} and {from_branch!r} share no history")
        if base_id == from_id:
            return self.version(into_id), []  # nothing new on the other side
        if base_id == into_id:
            self.branches[into_branch] = from_id  # fast-forward
            return self.version(from_id), []
        base = self.version(base_id)
        left = self.version(into_id)
        right = self.version(from_id)
        tree, warnings = _merge_trees(base.tree, left.tree, right.tree)
        for message in warnings:
            logger.warning("%s", message)
        cf, conflicts = _merge_entries(base.cf, left.cf, right.cf, tree, resolver)
        version = self._new_version((into_id, from_id), tree, cf)
        self.branches[into_branch] = version.id
        return version, conflicts


def rewrite_keys(cf: CitationFile, old: CanonicalPath, new: CanonicalPath) -> CitationFile:
    """Substitute the ``old`` path prefix with ``new`` in every affected key."""
    entries: dict[CanonicalPath, CitationRecord] = {}
    for key, record in cf.items():
        if old.is_file:
            entries[new if key == old else key] = record
        elif key.is_within(old):
            entries[key.rebased(old, new)] = record
        else:
            entries[key] = record
    if len(entries) != len(cf):
        raise InvariantBroken(f"key rewrite {old} -> {new} collided with existing entries")
    return CitationFile(entries)


def _apply_tree_edit(tree: TreeSnapshot, edit: TreeEdit) -> TreeSnapshot:
    if edit.kind is TreeEditKind.CREATE_FILE:
        if tree.node_by_name(edit.path.segments) is not None:
            raise EditConflict(f"{edit.path} already exists")
        return tree.with_file(edit.path, edit.digest)
    if edit.kind is TreeEditKind.DELETE:
        return tree.without(edit.path)
    if edit.kind is TreeEditKind.RENAME:
        return tree.with_renamed(edit.path, edit.to)
    return tree.with_modified(edit.path, edit.digest)


def _merge_trees(
    base: TreeSnapshot, left: TreeSnapshot, right: TreeSnapshot
) -> tuple[TreeSnapshot, list[str]]:
    """Three-way file-set merge; on a true content conflict the left (into)
    side wins and a warning is recorded."""
    warnings: list[str] = []

    def digests(tree: TreeSnapshot) -> dict[str, str]:
        return {str(p): tree.digest_at(p) for p in tree.file_paths()}

    b, l, r = digests(base), digests(left), digests(right)
    merged_files: dict[str, str] = {}
    for rendered in sorted(set(b) | set(l) | set(r)):
        db, dl, dr = b.get(rendered), l.get(rendered), r.get(rendered)
        if dl == dr:
            keep = dl
        elif db == dl:
            keep = dr
        elif db == dr:
            keep = dl
        else:
            keep = dl
            warnings.append(f"both branches changed {rendered}; keeping the current branch's state")
        if keep is not None:
            merged_files[rendered] = keep

    def dir_set(tree: TreeSnapshot) -> set[str]:
        return {str(p) for p in tree.dir_paths()}

    sb, sl, sr = dir_set(base), dir_set(left), dir_set(right)
    merged_dirs: set[str] = set()
    for rendered in sb | sl | sr:
        eb, el, er = rendered in sb, rendered in sl, rendered in sr
        if el == er:
            keep_dir = el
        elif eb == el:
            keep_dir = er
        else:
            keep_dir = el
        if keep_dir:
            merged_dirs.add(rendered)
    return TreeSnapshot.from_files(merged_files, dirs=sorted(merged_dirs)), warnings


def _merge_entries(
    base_cf: CitationFile,
    left_cf: CitationFile,
    right_cf: CitationFile,
    merged_tree: TreeSnapshot,
    resolver: Resolver | None,
) -> tuple[CitationFile, list[ConflictReport]]:
    merged: dict[CanonicalPath, CitationRecord] = {}
    conflicts: list[ConflictReport] = []
    for key in sorted(set(left_cf.keys()) | set(right_cf.keys())):
        lrec, rrec = left_cf.get(key), right_cf.get(key)
        if lrec is None or rrec is None:
            record = lrec if lrec is not None else rrec
        elif lrec == rrec:
            record = lrec
        else:
            brec = base_cf.get(key)
            if brec == lrec:
                record = rrec
            elif brec == rrec:
                record = lrec
            else:
                report = ConflictReport(key=key, left=lrec, right=rrec)
                choice = resolver(report) if resolver is not None else None
                if choice is None:
                    raise UnresolvedConflict(f"unresolved citation conflict at {key}")
                report.mark_resolved(choice)
                conflicts.append(report)
                record = choice
        merged[key] = record
    kept = {k: v for k, v in merged.items() if k.is_root or merged_tree.contains(k)}
    return CitationFile(kept), conflicts


def copy_cite(
    src_repo: Repository,
    src_version_id: str,
    src_subtree: CanonicalPath,
    dst_repo: Repository,
    dst_branch: str,
    dst_path: CanonicalPath,
) -> Version:
    """Copy a directory subtree between repositories, migrating its citations.

    Every explicit entry inside the source subtree is carried over with its
    key prefix rewritten to the destination, and the destination directory
    itself gains an explicit entry holding the source subtree's resolved
    citation, so every copied node keeps the citation it had at the source.
    """
    try:
        src_version = src_repo.versions[src_version_id]
    except KeyError:
        raise SourceVersionUnknown(f"no version {src_version_id!r} in {src_repo.id}") from None
    if not src_subtree.is_dir or not src_version.tree.contains(src_subtree):
        raise SubtreeMissing(f"{src_subtree} is not a directory of {src_version_id}")
    if not dst_path.is_dir or dst_path.is_root:
        raise DestinationCollision(f"{dst_path} is not a valid destination directory")
    head = dst_repo.head(dst_branch)
    if head.tree.node_by_name(dst_path.segments) is not None:
        raise DestinationCollision(f"{dst_path} already exists in {dst_repo.id}")
    parent = dst_path.parent()
    if not head.tree.contains(parent):
        raise EditConflict(f"destination parent {parent} does not exist")

    subtree = src_version.tree.subtree(src_subtree) if not src_subtree.is_root else src_version.tree.root
    tree = head.tree.with_subtree(dst_path, subtree)
    entries = head.cf.as_dict()
    for key, record in src_version.cf.items():
        if key.is_within(src_subtree):
            entries[key.rebased(src_subtree, dst_path)] = record
    entries[dst_path] = resolve(src_version.cf, src_version.tree, src_subtree)
    version = dst_repo._new_version((head.id,), tree, CitationFile(entries))
    dst_repo.branches[dst_branch] = version.id
    return version


def fork_cite(
    src_repo: Repository,
    version_id: str | None = None,
    new_repo_id: str | None = None,
) -> Repository:
    """A new repository holding one version and its full history.

    Trees and citation files are copied verbatim; the fork's root citation
    still names the original repository until its owner modifies it.
    """
    head_id = version_id if version_id is not None else src_repo.head_id(src_repo.default_branch)
    if head_id not in src_repo.versions:
        raise UnknownVersion(f"no version {head_id!r} in {src_repo.id}")
    fork = Repository(new_repo_id or f"{src_repo.id}-fork", default_branch=src_repo.default_branch)
    for vid in src_repo.ancestor_ids(head_id):
        fork.versions[vid] = src_repo.versions[vid]  # versions are immutable, safe to share
    fork.branches[fork.default_branch] = head_id
    fork.staged[fork.default_branch] = []
    fork._clock = max(v.timestamp for v in fork.versions.values()) + 1
    return fork
