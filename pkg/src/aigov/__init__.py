"""Governance engine for assessing the risk profile of an AI use case.

Builds a knowledge graph of models and evidence from documents,
auto-fills compliance questionnaires from a stated intent, prioritizes
risks, recommends models under a customer policy, and tracks guardrail
and mitigation resolutions with an auditable trail.  All generative
steps route through one gateway with a deterministic scripted backend
for offline use.
"""

__version__ = "0.1.0"
