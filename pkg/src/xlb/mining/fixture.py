"""A small offline universe of scripted git histories for end-to-end runs.

Two qualifying repositories:

* ``demo/pyfast`` (Python + C, ctypes): one fix to a cross-language function,
  one commit adding a new cross-language function, one fix to an ordinary
  function.
* ``demo/jbridge`` (Java + C, JNI): two fixes to cross-language methods, one
  of them arriving through a two-parent merge whose title also names a bug.

plus two that the repository filter rejects. The expected result is three
pairs, listed in :data:`EXPECTED_PAIRS`.
"""

from __future__ import annotations

import json
import os
import subprocess
from pathlib import Path
from typing import Union

EXPECTED_PAIRS = (
    ("demo/jbridge", "src/Reader.java", "Reader.fill"),
    ("demo/jbridge", "src/Reader.java", "Reader.load"),
    ("demo/pyfast", "fast.py", "checksum"),
)

_PYFAST_V1 = '''\
import ctypes

_lib = ctypes.CDLL("libfast.so")


def checksum(data):
    n = _lib.checksum(data, len(data))
    return n


def describe(values):
    return ", ".join(str(v) for v in values)
'''

_PYFAST_V2 = _PYFAST_V1.replace(
    "    n = _lib.checksum(data, len(data))\n    return n\n",
    "    n = _lib.checksum(data, len(data))\n    return n & 0xFFFFFFFF\n",
)

_PYFAST_V3 = _PYFAST_V2 + '''

def fast_hash(data):
    h = _lib.hash(data, len(data))
    return h
'''

_PYFAST_V4 = _PYFAST_V3.replace('", ".join', '"; ".join')

_FAST_C = """\
#include <stddef.h>

unsigned long checksum(const char *data, size_t n) {
    unsigned long s = 0;
    for (size_t i = 0; i < n; i++)
        s += (unsigned char)data[i];
    return s;
}
"""

_BRIDGE = """\
public class Bridge {
    public native int open(String path);
    public native int read(int fd, byte[] buf);

    static {
        System.loadLibrary("bridge");
    }
}
"""

_READER_V1 = """\
public class Reader {
    private final Bridge bridge = new Bridge();

    public int load(String path) {
        int fd = bridge.open(path);
        return fd;
    }

    public int fill(int fd, byte[] buf) {
        int n = bridge.read(fd, buf);
        return n;
    }

    public String name(String path) {
        return path.trim();
    }
}
"""

_READER_V2 = _READER_V1.replace(
    "        int fd = bridge.open(path);\n        return fd;\n",
    "        int fd = bridge.open(path);\n        if (fd < 0) {\n            return -1;\n        }\n        return fd;\n",
)

_READER_V3 = _READER_V2.replace(
    "        int n = bridge.read(fd, buf);\n        return n;\n",
    "        int n = bridge.read(fd, buf);\n        return n < 0 ? 0 : n;\n",
)

_BRIDGE_C = """\
#include <jni.h>

JNIEXPORT jint JNICALL Java_Bridge_open(JNIEnv *env, jobject self, jstring path) {
    return 3;
}
"""


def _issue(number, title, state="closed", labels=(), body=""):
    return {"number": number, "title": title, "state": state,
            "labels": [{"name": l} for l in labels], "body": body}


class _Repo:
    def __init__(self, path: Path) -> None:
        self.path = path
        self.tick = 0
        path.mkdir(parents=True, exist_ok=True)
        self.git("init", "--quiet", "--initial-branch=main")

    def git(self, *args: str) -> str:
        self.tick += 1
        stamp = f"2023-01-01T00:{self.tick // 60:02d}:{self.tick % 60:02d}+00:00"
        env = dict(os.environ)
        env.update({
            "GIT_AUTHOR_NAME": "Demo Dev", "GIT_AUTHOR_EMAIL": "dev@example.org",
            "GIT_COMMITTER_NAME": "Demo Dev", "GIT_COMMITTER_EMAIL": "dev@example.org",
            "GIT_AUTHOR_DATE": stamp, "GIT_COMMITTER_DATE": stamp,
            "GIT_CONFIG_GLOBAL": os.devnull, "GIT_CONFIG_NOSYSTEM": "1",
        })
        proc = subprocess.run(["git", "-C", str(self.path), "-c", "commit.gpgsign=false", *args],
                              env=env, capture_output=True, text=True, check=True)
        return proc.stdout.strip()

    def commit(self, message: str, files: dict[str, str]) -> str:
        for rel, text in files.items():
            target = self.path / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
            self.git("add", rel)
        self.git("commit", "--quiet", "-m", message)
        return self.git("rev-parse", "HEAD")


def make_demo_universe(dest: Union[str, Path]) -> Path:
    """Create the universe under ``dest`` (which must be empty or absent)."""
    dest = Path(dest)
    if dest.exists() and any(dest.iterdir()):
        raise FileExistsError(f"{dest} is not empty")
    dest.mkdir(parents=True, exist_ok=True)

    py = _Repo(dest / "git" / "pyfast")
    py.commit("Initial import", {"fast.py": _PYFAST_V1, "native/fast.c": _FAST_C})
    py.commit("Fix checksum overflow on large buffers (#1)", {"fast.py": _PYFAST_V2})
    py.commit("Add native hash helper for #2", {"fast.py": _PYFAST_V3})
    py.commit("Fix describe separator (#3)", {"fast.py": _PYFAST_V4})
    py.commit("Update readme", {"README.md": "pyfast\n"})

    jv = _Repo(dest / "git" / "jbridge")
    jv.commit("Initial import (#8)", {"src/Bridge.java": _BRIDGE, "src/Reader.java": _READER_V1,
                                      "native/bridge.c": _BRIDGE_C})
    jv.commit("Fix fd leak when open fails (#5)", {"src/Reader.java": _READER_V2})
    jv.git("checkout", "--quiet", "-b", "fix-read")
    jv.commit("Fix short read handling (#6)", {"src/Reader.java": _READER_V3})
    jv.git("checkout", "--quiet", "main")
    jv.commit("Add build notes", {"BUILD.md": "make\n"})
    jv.git("merge", "--quiet", "--no-ff", "fix-read", "-m", "Merge pull request #7 from demo/fix-read")

    universe = {
        "repositories": [
            {
                "full_name": "demo/pyfast",
                "stars": 1200,
                "description": "Fast checksums through a small C library",
                "default_branch": "main",
                "languages": {"Python": 6000, "C": 3000},
                "git": "git/pyfast",
                "issues": [
                    _issue(1, "Checksum wrong for large buffers", labels=["bug"],
                           body="An integer overflow in the native sum corrupts results."),
                    _issue(2, "Crash when hashing empty input", labels=["bug"]),
                    _issue(3, "describe output broken with commas", labels=["bug"]),
                    _issue(4, "fix crash on import", state="open"),
                    _issue(5, "Add docs", labels=["enhancement"]),
                ],
            },
            {
                "full_name": "demo/jbridge",
                "stars": 800,
                "description": "JNI bridge to a native file reader",
                "default_branch": "main",
                "languages": {"Java": 5000, "C": 2000, "Shell": 100},
                "git": "git/jbridge",
                "issues": [
                    _issue(5, "File descriptor leak", labels=["bug"]),
                    _issue(6, "Short reads return garbage", labels=["defect"]),
                    _issue(7, "Reader error handling", labels=["bug"]),
                    _issue(8, "Bootstrap error", labels=["bug"]),
                ],
            },
            {
                "full_name": "demo/pureweb",
                "stars": 5000,
                "description": "A pure Python web toolkit",
                "default_branch": "main",
                "languages": {"Python": 10000},
                "issues": [],
            },
            {
                "full_name": "demo/almost",
                "stars": 499,
                "description": "Python with a C core, just under the star bar",
                "default_branch": "main",
                "languages": {"Python": 6000, "C": 3000},
                "issues": [],
            },
        ]
    }
    (dest / "universe.json").write_text(json.dumps(universe, indent=2) + "\n", encoding="utf-8")
    return dest
