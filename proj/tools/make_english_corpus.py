#!/usr/bin/env python3
"""Assemble an English prose corpus (JSON Lines) from documentation text:
Python docstrings, Rust/JS/TS doc comments, Markdown/reStructuredText/plain
text files, and "documentation"/"description" fields of JSON API models
(e.g. the botocore and google-api-python-client wheels). Paragraphs are
filtered for prose-like content, deduplicated, and grouped into documents.

Usage:
  make_english_corpus.py --out corpus.jsonl --target-mb 110 [--source DIR ...]
"""
import argparse
import ast
import gzip
import hashlib
import html
import json
import os
import re
import sys

WORD = re.compile(r"[A-Za-z][a-z]+")
TAG = re.compile(r"<[^>]+>")
DOC_LINE = re.compile(r"^\s*(?:///|//!|\*|/\*\*)\s?(.*)$")

DEFAULT_SOURCES = [
    "/usr/local/lib/python3.10/dist-packages",
    "/usr/lib/python3.10",
    "/opt/cargo/registry/src",
    "/usr/lib/node_modules",
]


def prose_like(para):
    if len(para) < 60:
        return False
    if ">>>" in para or "```" in para or "://" in para:
        return False
    letters = sum(ch.isalpha() or ch == " " for ch in para)
    if letters < 0.82 * len(para):
        return False
    words = WORD.findall(para)
    return len(words) >= 8 and sum(len(w) for w in words) > 0.55 * len(para)


def python_paragraphs(path):
    with open(path, encoding="utf-8") as f:
        tree = ast.parse(f.read())
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Module)):
            doc = ast.get_docstring(node)
            if doc:
                yield from doc.split("\n\n")


def comment_paragraphs(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    cur = []
    for line in lines:
        m = DOC_LINE.match(line)
        body = m.group(1).strip() if m else None
        if body:
            cur.append(body)
        else:
            if cur:
                yield " ".join(cur)
            cur = []
    if cur:
        yield " ".join(cur)


def text_paragraphs(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    for para in re.split(r"\n\s*\n", text):
        if para.lstrip().startswith(("#", "|", "..", "::", "    ", "<", "=", "-", "*")):
            continue
        yield para


def json_paragraphs(path):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as f:
        doc = json.loads(f.read())
    stack = [doc]
    while stack:
        o = stack.pop()
        if isinstance(o, dict):
            for k in sorted(o):
                v = o[k]
                if k in ("documentation", "description") and isinstance(v, str):
                    for para in re.split(r"</p>|\n\s*\n", v):
                        yield html.unescape(TAG.sub(" ", para))
                else:
                    stack.append(v)
        elif isinstance(o, list):
            stack.extend(reversed(o))


def extractor(name):
    if name.endswith(".py"):
        return python_paragraphs
    if name.endswith((".rs", ".ts", ".js")):
        return comment_paragraphs
    if name.endswith((".md", ".rst", ".txt")):
        return text_paragraphs
    if name.endswith((".json", ".json.gz")):
        return json_paragraphs
    return None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--target-mb", type=float, default=110.0)
    ap.add_argument("--doc-bytes", type=int, default=8000)
    ap.add_argument("--source", action="append", help="directory to scan (repeatable)")
    args = ap.parse_args()
    target = int(args.target_mb * 1e6)
    seen = set()
    total = ndocs = 0

    def emit(out, paras, path, part):
        nonlocal total, ndocs
        text = "\n".join(paras)
        meta = {"source": path, "part": str(part)}
        out.write(json.dumps({"text": text, "meta": meta}, ensure_ascii=False) + "\n")
        total += len(text.encode())
        ndocs += 1

    with open(args.out, "w", encoding="utf-8") as out:
        for root in args.source or DEFAULT_SOURCES:
            for dirpath, dirnames, filenames in os.walk(root):
                dirnames.sort()
                for name in sorted(filenames):
                    extract = extractor(name)
                    if extract is None:
                        continue
                    path = os.path.join(dirpath, name)
                    paras, size, part = [], 0, 0
                    try:
                        for para in extract(path):
                            para = " ".join(para.split())
                            if not prose_like(para):
                                continue
                            h = hashlib.md5(para.encode()).digest()
                            if h in seen:
                                continue
                            seen.add(h)
                            paras.append(para)
                            size += len(para) + 1
                            if size >= args.doc_bytes:
                                emit(out, paras, path, part)
                                paras, size, part = [], 0, part + 1
                    except (OSError, SyntaxError, ValueError, UnicodeDecodeError, RecursionError):
                        pass
                    if paras:
                        emit(out, paras, path, part)
                    if total >= target:
                        print(f"{ndocs} documents, {total} bytes", file=sys.stderr)
                        return
    print(f"{ndocs} documents, {total} bytes (target not reached)", file=sys.stderr)
    sys.exit(1)


if __name__ == "__main__":
    main()
