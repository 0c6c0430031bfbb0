"""Atomic file writes shared by corpus, model, metrics, and report writers."""

import os
import tempfile


def atomic_write_text(path, text):
    """Write text to path via a temp file + rename so readers never see
    a partial artifact and an aborted run leaves no file behind."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
