#!/usr/bin/env python3
"""Offline LLM pipeline demo against an in-memory stub transport.

Shows the generate -> dedup -> parse-filter -> backtranslate flow without
any network access, then prints the audit trail.
"""

from __future__ import annotations

from bashsynth.llm_bridge import (
    GENERATION_PROMPT,
    TRANSLATION_PROMPT,
    LlmConfig,
    LlmSession,
    ReplayTransport,
)


def _request(prompt: str, temperature: float) -> dict:
    return {
        "model": "default",
        "messages": [{"role": "user", "content": prompt}],
        "temperature": temperature,
    }


GENERATIONS = [
    "ls -la",
    "find /var/log -name '*.log'",
    "du -sh /tmp",
    "ls -la",             # duplicate, dropped before translation
    "| wc -l",            # no utility, dropped by the parse filter
    "sort -u names.txt",
]

TRANSLATIONS = {
    "ls -la": "list all files in long format including hidden ones",
    "find /var/log -name '*.log'": "find log files under /var/log",
    "du -sh /tmp": "print the total size of /tmp",
    "sort -u names.txt": "sort names.txt dropping duplicate lines",
}


def main() -> int:
    entries = [{"request": _request(GENERATION_PROMPT, 1.0), "response": g}
               for g in GENERATIONS]
    entries += [
        {"request": _request(f"{TRANSLATION_PROMPT}: {cmd}", 0.0), "response": nl}
        for cmd, nl in TRANSLATIONS.items()
    ]

    session = LlmSession(LlmConfig(), ReplayTransport(entries))
    records = session.pipeline(len(GENERATIONS))

    print(f"{len(GENERATIONS)} prompts -> {len(records)} records\n")
    for record in records:
        print(f"  {record.cmd:<35} {record.nl}")

    print(f"\naudit trail ({len(session.audit)} exchanges):")
    for exchange in session.audit:
        print(f"  [{exchange.task}] t={exchange.temperature} "
              f"attempt={exchange.attempt} -> {exchange.response[:50]!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
