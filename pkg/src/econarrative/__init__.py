"""Narrative-signal forecasting harness.

Loads tweet corpora and macroeconomic indicator series, extracts textual
features (lexicon sentiment, hashed embeddings, LLM analyses), trains
financial / textual / combined predictors, and evaluates them against
rule baselines and counterfactual text sources.
"""

__version__ = "0.1.0"
