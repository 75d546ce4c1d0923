import asyncio
import os

from results import ResultWriter


def test_write_text_is_atomic(tmp_path):
    writer = ResultWriter(str(tmp_path / "out"))
    result = asyncio.run(writer.write_text("example-point/summary.txt", "PASS\n"))
    assert result["success"]
    assert result["size"] == 5
    path = tmp_path / "out" / "example-point" / "summary.txt"
    assert path.read_text(encoding="utf-8") == "PASS\n"
    assert os.listdir(path.parent) == ["summary.txt"]


def test_write_all_reports_failures(tmp_path):
    writer = ResultWriter(str(tmp_path))
    (tmp_path / "blocked").write_text("a file, not a directory", encoding="utf-8")
    result = asyncio.run(writer.write_all({"ok.csv": "x\n", "blocked/inner.csv": "y\n"}))
    assert not result["success"]
    assert result["written"] == [str(tmp_path / "ok.csv")]
    assert result["failed"] == [str(tmp_path / "blocked" / "inner.csv")]
    assert sorted(os.listdir(tmp_path)) == ["blocked", "ok.csv"]
