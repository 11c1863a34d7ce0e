#!/usr/bin/env python3
"""Record wire-format chat transcripts from the demo-corpus service.

The frontend's contract tests run against these recordings instead of a
live backend.  Regenerate after changing the demo corpus or wire format:

    python3 scripts/record_transcripts.py
"""

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from aloha.config import Config
from aloha.service import build_state, handle_chat

NOW = 1736035200

FIXTURE_MESSAGES = [
    ("french-canteen-location", "Où se trouve la Cantine Xinyuan ?"),
    ("english-canteen-location", "Where is Canteen Xinyuan?"),
    ("chinese-opening-hours", "颐年食堂的开放时间是几点"),
    ("chinese-concept-introduce", "介绍国际关系学院"),
    ("chinese-less-crowded-canteen", "哪个食堂人比较少"),
    ("chinese-winter-vacation", "寒假什么时候开始"),
    ("english-opening-hours-degraded", "What are the opening hours of Canteen Yannan?"),
    ("gibberish-refusal", "qwzx jvkp"),
]


def main() -> None:
    state = build_state(Config())
    transcripts = []
    for name, message in FIXTURE_MESSAGES:
        wire = handle_chat(state, message, now=NOW)
        trace = state.traces.get(wire["trace_id"])
        wire = dict(wire, latency_ms=0.0)  # stable recordings
        transcripts.append({"name": name, "request": {"message": message}, "response": wire, "trace": trace})
    out = REPO / "frontend" / "fixtures" / "transcripts.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(transcripts, ensure_ascii=False, indent=2), encoding="utf-8")
    print(f"wrote {len(transcripts)} transcripts to {out}")


if __name__ == "__main__":
    main()
