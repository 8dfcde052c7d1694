"""skillbench: benchmark harness for skill-extraction systems.

Evaluates extractors (encoder NER services, LLM adapters, anything that can
speak the ``skillbench/1`` wire protocol) against span-annotated job-vacancy
corpora, scoring predicted skill strings against gold annotations by
embedding cosine similarity with a one-to-one matching above a configurable
threshold (default 0.85, inclusive).
"""

__version__ = "0.1.0"

PROTOCOL = "skillbench/1"
