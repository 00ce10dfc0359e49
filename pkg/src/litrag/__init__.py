"""litrag: academic-literature RAG engine and evaluation harness."""

__version__ = "0.1.0"
