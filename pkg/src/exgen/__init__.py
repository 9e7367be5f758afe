"""Exercise generation, filtering, and curation pipeline.

A completion backend is primed with one example exercise and a set of
theme/concept keywords, candidate exercises are parsed out of the raw
completions, automatic filters (arithmetic consistency, code execution,
unit tests, statement coverage, novelty) weed out broken candidates, and
survivors flow into a persisted human review queue.
"""

__version__ = "0.1.0"
