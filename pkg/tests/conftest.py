from __future__ import annotations

from pathlib import Path

import pytest

from bashsynth.llm_bridge import GENERATION_PROMPT, TRANSLATION_PROMPT
from bashsynth.syntax_kb import SyntaxKb

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def kb() -> SyntaxKb:
    return SyntaxKb.load()


@pytest.fixture(scope="session")
def hints(kb):
    return kb.parser_hints()


@pytest.fixture(scope="session")
def corpus_lines() -> list[str]:
    lines = [
        line
        for line in (DATA_DIR / "corpus.txt").read_text().splitlines()
        if line.strip()
    ]
    assert len(lines) >= 200
    return lines


def _request(prompt: str, temperature: float) -> dict:
    return {
        "model": "default",
        "messages": [{"role": "user", "content": prompt}],
        "temperature": temperature,
    }


REPLAY_TRANSLATIONS = {
    "ls -la": "list all files including hidden ones in long format",
    "find . -name '*.txt'": "find all text files under the current directory",
    "grep -w foo a.txt": "search for the whole word foo in a.txt",
    "du -sh tree": "show the total size of the tree directory",
    "sort -r b.txt": "sort the lines of b.txt in reverse order",
}


def make_replay_entries() -> list[dict]:
    """Stub exchange log: 10 generation responses (2 duplicates, 3 that do
    not parse) plus back-translations for the 5 survivors."""
    gen_responses = [
        "```bash\nls -la\n```",
        "find . -name '*.txt'",
        "ls -la",
        "| sort",
        "$ grep -w foo a.txt",
        'echo "unclosed',
        "`du -sh tree`",
        "find . -name '*.txt'",
        "(cd abc && ls)",
        "sort -r b.txt",
    ]
    entries = [
        {"request": _request(GENERATION_PROMPT, 1.0), "response": r}
        for r in gen_responses
    ]
    for cmd, nl in REPLAY_TRANSLATIONS.items():
        entries.append(
            {"request": _request(f"{TRANSLATION_PROMPT}: {cmd}", 0.0), "response": nl}
        )
    return entries


@pytest.fixture
def replay_entries() -> list[dict]:
    return make_replay_entries()
