"""corpus-scope: batch text mining for bibliographic abstract corpora.

Submodules follow the processing order: corpus_ingest (records in),
text_pipeline (tokens and the document-term matrix), eda (yearly trend and
shares), lsa (correspondence analysis), lda (topic model), bigrams (word
networks), pipeline/cli (orchestration). Everything is deterministic for a
given input, configuration, and seed.
"""

__version__ = "0.1.0"

from .corpus_ingest import Corpus, Document, DocType, parse_records  # noqa: F401
from .errors import CorpusScopeError  # noqa: F401
