"""Human-vs-AI code stylometry toolkit.

Builds labeled multilingual datasets by translating human-written snippets
with a completion LLM, trains transformer and classical classifiers to tell
human from AI code, and ships a detection CLI.
"""

__version__ = "0.1.0"
