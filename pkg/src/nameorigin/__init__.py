"""Nationality, region, and continent prediction from romanized personal names.

Trainable character n-gram baselines, six LLM prompting pipelines, and a
hierarchical frequency-stratified evaluation suite over a 99-nationality
label space.
"""

__version__ = "0.1.0"
