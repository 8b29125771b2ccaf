"""Citation editing operations, with role and latest-version guards.

Project members add, delete, and modify citation entries; citers only read
resolved citations. Edits are staged against a branch head and become
durable when that branch commits. Mutating operations need exclusive access
to the repository; reads (gen_cite) may run concurrently with other reads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import (
    AlreadyCited,
    MissingMetadata,
    NotCited,
    NotLatestVersion,
    PathNotInTree,
    RoleForbidden,
    RootUndeletable,
)
from .model import CitationFile, CitationRecord, TreeSnapshot, resolve
from .paths import CanonicalPath

if TYPE_CHECKING:
    from .store import Repository


class Role(enum.Enum):
    PROJECT_MEMBER = "project_member"
    CITER = "citer"


@dataclass(frozen=True)
class RoleContext:
    """Who is acting. Citers may only invoke read operations."""

    role: Role
    actor: str


class CiteEditKind(enum.Enum):
    ADD = "add"
    DELETE = "delete"
    MODIFY = "modify"


@dataclass(frozen=True)
class CiteEdit:
    """One staged citation-file edit. Delete edits never target the root."""

    kind: CiteEditKind
    path: CanonicalPath
    record: CitationRecord | None = None

    def __post_init__(self) -> None:
        if self.kind is CiteEditKind.DELETE:
            if self.record is not None:
                raise ValueError("delete edits carry no record")
            if self.path.is_root:
                raise ValueError("delete edits never target the root")
        elif self.record is None:
            raise ValueError(f"{self.kind.value} edits need a record")

    @classmethod
    def add(cls, path: CanonicalPath, record: CitationRecord) -> "CiteEdit":
        return cls(CiteEditKind.ADD, path, record)

    @classmethod
    def delete(cls, path: CanonicalPath) -> "CiteEdit":
        return cls(CiteEditKind.DELETE, path)

    @classmethod
    def modify(cls, path: CanonicalPath, record: CitationRecord) -> "CiteEdit":
        return cls(CiteEditKind.MODIFY, path, record)


def apply_add(cf: CitationFile, tree: TreeSnapshot, path: CanonicalPath, record: CitationRecord) -> CitationFile:
    """Attach a citation to an uncited path that exists in the tree."""
    if not tree.contains(path):
        raise PathNotInTree(str(path))
    if path in cf:
        raise AlreadyCited(f"{path} already has a citation; modify it instead")
    return cf.with_entry(path, record)


def apply_delete(cf: CitationFile, path: CanonicalPath) -> CitationFile:
    """Remove an explicit citation; the subtree falls back to the next ancestor."""
    if path.is_root:
        raise RootUndeletable("the root citation cannot be deleted")
    if path not in cf:
        raise NotCited(f"{path} has no citation")
    return cf.without(path)


def apply_modify(cf: CitationFile, path: CanonicalPath, record: CitationRecord) -> CitationFile:
    """Replace an explicit citation; the active domain is unchanged."""
    if path not in cf:
        raise NotCited(f"{path} has no citation")
    return cf.with_entry(path, record)


def _require_member(ctx: RoleContext) -> None:
    if ctx.role is not Role.PROJECT_MEMBER:
        raise RoleForbidden(f"{ctx.actor} ({ctx.role.value}) may not edit citations")


def _require_latest(repo: "Repository", branch: str, at_version: str | None) -> None:
    head = repo.head_id(branch)
    if at_version is not None and at_version != head:
        raise NotLatestVersion(
            f"{at_version} is not the head of {branch!r} ({head}); citations update only on the latest version"
        )


def staged_citation_file(repo: "Repository", branch: str) -> CitationFile:
    """The head citation file with the branch's staged edits applied."""
    cf = repo.head(branch).cf
    for edit in repo.staged.get(branch, ()):
        if edit.kind is CiteEditKind.DELETE:
            cf = cf.without(edit.path) if edit.path in cf else cf
        else:
            cf = cf.with_entry(edit.path, edit.record)
    return cf


def add_cite(
    repo: "Repository",
    ctx: RoleContext,
    branch: str,
    path: CanonicalPath,
    record: CitationRecord,
    at_version: str | None = None,
) -> CitationFile:
    _require_member(ctx)
    _require_latest(repo, branch, at_version)
    head = repo.head(branch)
    staged = apply_add(staged_citation_file(repo, branch), head.tree, path, record)
    repo.staged.setdefault(branch, []).append(CiteEdit.add(path, record))
    return staged


def del_cite(
    repo: "Repository",
    ctx: RoleContext,
    branch: str,
    path: CanonicalPath,
    at_version: str | None = None,
) -> CitationFile:
    _require_member(ctx)
    _require_latest(repo, branch, at_version)
    staged = apply_delete(staged_citation_file(repo, branch), path)
    repo.staged.setdefault(branch, []).append(CiteEdit.delete(path))
    return staged


def modify_cite(
    repo: "Repository",
    ctx: RoleContext,
    branch: str,
    path: CanonicalPath,
    record: CitationRecord,
    at_version: str | None = None,
) -> CitationFile:
    _require_member(ctx)
    _require_latest(repo, branch, at_version)
    staged = apply_modify(staged_citation_file(repo, branch), path, record)
    repo.staged.setdefault(branch, []).append(CiteEdit.modify(path, record))
    return staged


def gen_cite(repo: "Repository", version_id: str, path: CanonicalPath) -> CitationRecord:
    """Resolved citation of ``path`` at any stored version. Read-only."""
    version = repo.version(version_id)
    return resolve(version.cf, version.tree, path)


@dataclass(frozen=True)
class RepositoryMetadata:
    """Repository facts a default root citation is synthesized from."""

    owner: str
    repo_name: str
    locator: str
    head_commit_id: str = ""
    head_commit_date: str = ""
    contributors: tuple[str, ...] = ()


def default_root_citation(meta: RepositoryMetadata) -> CitationRecord:
    """Build the generated root citation; its author list is never empty."""
    for name in ("owner", "repo_name", "locator"):
        if not getattr(meta, name):
            raise MissingMetadata(f"{name} is required for the default citation")
    authors = tuple(meta.contributors) or (meta.owner,)
    return CitationRecord(
        owner=meta.owner,
        repo_name=meta.repo_name,
        locator=meta.locator,
        version_id=meta.head_commit_id,
        date=meta.head_commit_date,
        author_list=authors,
    )
