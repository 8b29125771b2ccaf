from __future__ import annotations

import http.server
import json
import threading
from pathlib import Path

import pytest

from gitcite import CitationFile, Repository
from gitcite.errors import FileMissing, HttpStatus, MalformedDocument, NetworkFailure, UnknownVersion
from gitcite.fileformat import serialize
from gitcite.gitadapter import (
    citation_file_at_revision,
    fetch_remote_citation_file,
    load_citation_file,
    merge_citation_files,
    repo_metadata,
    snapshot_worktree,
    staged_changes,
    store_citation_file,
    sync_on_commit,
    tree_at_revision,
)
from gitcite.ops import CiteEdit, default_root_citation
from gitcite.paths import ROOT, from_rendered
from gitcite.store import TreeEdit, choose_right

from conftest import git
from support import record, tree


def seed(root: Path, files: dict[str, str], cites: dict[str, str]) -> CitationFile:
    for rel, content in files.items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
    cf = CitationFile(
        {ROOT: record("root"), **{from_rendered(k): record(tag) for k, tag in cites.items()}}
    )
    store_citation_file(root, cf)
    git(root, "add", "-A")
    git(root, "commit", "-q", "-m", "seed")
    return cf


class TestLoadStore:
    def test_store_then_load_is_identity(self, tmp_path):
        cf = CitationFile.single(record("r"))
        store_citation_file(tmp_path, cf)
        assert load_citation_file(tmp_path) == cf

    def test_store_twice_gives_identical_bytes(self, tmp_path):
        cf = CitationFile.single(record("r"))
        store_citation_file(tmp_path, cf)
        first = (tmp_path / "citation.cite").read_bytes()
        store_citation_file(tmp_path, cf)
        assert (tmp_path / "citation.cite").read_bytes() == first

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileMissing):
            load_citation_file(tmp_path)

    def test_malformed_file(self, tmp_path):
        (tmp_path / "citation.cite").write_text("{broken")
        with pytest.raises(MalformedDocument):
            load_citation_file(tmp_path)

    def test_env_var_overrides_the_name(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GITCITE_FILE", "CITATION.json")
        cf = CitationFile.single(record("r"))
        store_citation_file(tmp_path, cf)
        assert (tmp_path / "CITATION.json").is_file()
        assert load_citation_file(tmp_path) == cf

    def test_unwritable_target_is_an_io_failure(self, tmp_path):
        from gitcite.errors import IoFailure

        (tmp_path / "citation.cite").mkdir()  # a directory blocks the write
        with pytest.raises(IoFailure):
            store_citation_file(tmp_path, CitationFile.single(record("r")))

    def test_hand_edited_file_warns_but_loads(self, tmp_path, caplog):
        store_citation_file(tmp_path, CitationFile.single(record("r")))
        text = (tmp_path / "citation.cite").read_text()
        (tmp_path / "citation.cite").write_text(text.replace("\n", "\n "))
        with caplog.at_level("WARNING", logger="gitcite.gitadapter"):
            load_citation_file(tmp_path)
        assert any("canonical form" in message for message in caplog.messages)


class TestSyncOnCommit:
    def test_directory_rename_rewrites_by_prefix_like_the_reference(self, tmp_path):
        files = {"lib/a.c": "a", "lib/sub/b.c": "b", "other.c": "o"}
        cites = {"/lib/": "lib", "/lib/sub/b.c": "b"}
        store_citation_file(tmp_path, CitationFile(
            {ROOT: record("root"), **{from_rendered(k): record(t) for k, t in cites.items()}}
        ))
        synced = sync_on_commit(
            tmp_path,
            rename_map=[(from_rendered("/lib/"), from_rendered("/vendor/"))],
            deleted=[],
        )
        reference = Repository.create(
            "ref", record("root"), tree=tree("/lib/a.c", "/lib/sub/b.c", "/other.c")
        )
        reference.commit("main", cite_edits=[
            CiteEdit.add(from_rendered(k), record(t)) for k, t in cites.items()
        ])
        expected = reference.commit(
            "main", [TreeEdit.rename(from_rendered("/lib/"), from_rendered("/vendor/"))]
        ).cf
        assert serialize(synced) == serialize(expected)
        assert load_citation_file(tmp_path) == expected

    def test_empty_change_lists_leave_the_bytes_alone(self, tmp_path):
        store_citation_file(tmp_path, CitationFile.single(record("r")))
        before = (tmp_path / "citation.cite").read_bytes()
        sync_on_commit(tmp_path, [], [])
        assert (tmp_path / "citation.cite").read_bytes() == before

    def test_deleting_the_only_cited_file_leaves_the_root(self, tmp_path):
        store_citation_file(tmp_path, CitationFile(
            {ROOT: record("root"), from_rendered("/a.c"): record("a")}
        ))
        synced = sync_on_commit(tmp_path, [], [from_rendered("/a.c")])
        assert [str(k) for k in synced.keys()] == ["/"]


class TestStagedChanges:
    def test_reports_renames_and_deletes(self, git_repo):
        root = git_repo()
        seed(root, {"keep.c": "k", "old.c": "o", "gone.c": "g"}, {})
        git(root, "mv", "old.c", "new.c")
        git(root, "rm", "-q", "gone.c")
        renames, deleted = staged_changes(root)
        assert [(str(a), str(b)) for a, b in renames] == [("/old.c", "/new.c")]
        assert [str(d) for d in deleted] == ["/gone.c"]

    def test_infers_a_complete_directory_move(self, git_repo):
        root = git_repo()
        seed(root, {"pkg/a.c": "a", "pkg/deep/b.c": "b", "other.c": "o"}, {})
        git(root, "mv", "pkg", "moved")
        renames, _ = staged_changes(root)
        rendered = [(str(a), str(b)) for a, b in renames]
        assert rendered[0] == ("/pkg/", "/moved/")

    def test_partial_moves_stay_file_level(self, git_repo):
        root = git_repo()
        seed(root, {"pkg/a.c": "a", "pkg/b.c": "b"}, {})
        git(root, "mv", "pkg/a.c", "a-moved.c")
        renames, _ = staged_changes(root)
        rendered = [(str(a), str(b)) for a, b in renames]
        assert rendered == [("/pkg/a.c", "/a-moved.c")]


class TestWorktreeAndHistory:
    def test_snapshot_skips_git_dir_and_citation_file(self, git_repo):
        root = git_repo()
        seed(root, {"src/a.c": "a"}, {})
        snap = snapshot_worktree(root)
        assert [str(p) for p in snap.paths()] == ["/", "/src/", "/src/a.c"]

    def test_tree_and_citation_file_at_a_revision(self, git_repo):
        root = git_repo()
        first_cf = seed(root, {"a.c": "1"}, {"/a.c": "a"})
        first_rev = git(root, "rev-parse", "HEAD").stdout.strip()
        (root / "b.c").write_text("2")
        store_citation_file(root, first_cf.with_entry(from_rendered("/b.c"), record("b")))
        git(root, "add", "-A")
        git(root, "commit", "-q", "-m", "second")
        old_tree = tree_at_revision(root, first_rev)
        assert [str(p) for p in old_tree.paths()] == ["/", "/a.c"]
        assert citation_file_at_revision(root, first_rev) == first_cf
        assert from_rendered("/b.c") in citation_file_at_revision(root, "HEAD")
        with pytest.raises(UnknownVersion):
            tree_at_revision(root, "not-a-rev")
        with pytest.raises(UnknownVersion):
            citation_file_at_revision(root, "not-a-rev")

    def test_repo_metadata_matches_direct_git_queries(self, git_repo):
        root = git_repo(origin="https://example.com/carol/widget.git")
        seed(root, {"a.c": "1"}, {})
        git(root, "commit", "-q", "--allow-empty", "-m", "more", "--author", "Bob Builder <bob@example.com>")
        meta = repo_metadata(root)
        assert meta.owner == "carol"
        assert meta.repo_name == "widget"
        assert meta.locator == "https://example.com/carol/widget.git"
        assert meta.head_commit_id == git(root, "rev-parse", "--short", "HEAD").stdout.strip()
        assert meta.head_commit_date == git(root, "log", "-1", "--format=%cI").stdout.strip()
        assert meta.contributors == ("Ada Tester", "Bob Builder")
        rec = default_root_citation(meta)
        assert rec.author_list == ("Ada Tester", "Bob Builder")

    def test_repo_metadata_without_origin_falls_back(self, git_repo):
        root = git_repo()
        seed(root, {"a.c": "1"}, {})
        meta = repo_metadata(root)
        assert meta.owner == "Ada Tester"
        assert meta.repo_name == root.name
        assert meta.locator.startswith("file://")


class TestMergeCitationFiles:
    BASE = CitationFile({ROOT: record("root"), from_rendered("/k.c"): record("old")})

    def test_left_only_change_wins_without_conflict(self):
        left = self.BASE.with_entry(from_rendered("/k.c"), record("new"))
        merged, conflicts = merge_citation_files(self.BASE, left, self.BASE, tree("/k.c"))
        assert conflicts == []
        assert merged.get(from_rendered("/k.c")) == record("new")

    def test_both_changed_goes_to_the_resolver(self):
        left = self.BASE.with_entry(from_rendered("/k.c"), record("l"))
        right = self.BASE.with_entry(from_rendered("/k.c"), record("r"))
        merged, conflicts = merge_citation_files(self.BASE, left, right, tree("/k.c"), choose_right)
        assert [(str(c.key), c.resolution) for c in conflicts] == [("/k.c", "chose_right")]
        assert merged.get(from_rendered("/k.c")) == record("r")

    def test_prunes_entries_for_files_missing_from_the_merged_tree(self):
        left = self.BASE
        right = self.BASE.with_entry(from_rendered("/extra.c"), record("x"))
        merged, conflicts = merge_citation_files(self.BASE, left, right, tree("/k.c"))
        assert conflicts == []
        assert from_rendered("/extra.c") not in merged


class _Handler(http.server.SimpleHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass


@pytest.fixture
def http_root(tmp_path):
    served = tmp_path / "www"
    served.mkdir()
    handler = lambda *a, **kw: _Handler(*a, directory=str(served), **kw)  # noqa: E731
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield served, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestFetch:
    def test_fetch_parses_a_served_document(self, http_root):
        served, url = http_root
        cf = CitationFile({ROOT: record("remote"), from_rendered("/lib/"): record("lib")})
        (served / "citation.cite").write_text(serialize(cf))
        fetched = fetch_remote_citation_file(f"{url}/citation.cite")
        assert fetched == cf
        assert serialize(fetched) == (served / "citation.cite").read_text()

    def test_http_404(self, http_root):
        _, url = http_root
        with pytest.raises(HttpStatus) as err:
            fetch_remote_citation_file(f"{url}/nope.cite")
        assert err.value.code == 404

    def test_unreachable_host(self):
        with pytest.raises(NetworkFailure):
            fetch_remote_citation_file("http://127.0.0.1:1/citation.cite", timeout=0.5)

    def test_malformed_remote_document(self, http_root):
        served, url = http_root
        (served / "bad.cite").write_text(json.dumps({"no-root": {}}))
        with pytest.raises(MalformedDocument):
            fetch_remote_citation_file(f"{url}/bad.cite")
