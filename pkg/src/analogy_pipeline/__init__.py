"""Modular pipeline for generating and evaluating educational analogies.

The pipeline moves a target system through four stages: finding a familiar
source system (closed-pool retrieval or open-ended generation), aligning
sub-concepts between the two systems, generating a natural-language
explanation, and scoring the result with a rubric-driven judge model.
Agreement statistics and a human annotation service close the loop between
model scores and human judgments.
"""

__version__ = "0.1.0"
