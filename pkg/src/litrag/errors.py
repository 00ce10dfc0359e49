"""Exception hierarchy for the litrag engine.

Every operational failure raises a subclass of LitragError so callers
(CLI, HTTP layer, eval runner) can map failures uniformly.
"""


class LitragError(Exception):
    """Base class for all litrag errors."""


# --- LLM / provider reachability -------------------------------------------

class LlmUnavailable(LitragError):
    """LLM endpoint unreachable or returned a non-success status."""


class ProviderUnavailable(LitragError):
    """Embedding provider unreachable or returned a non-success status."""


class JudgeUnavailable(LitragError):
    """Judge LLM unreachable."""


class JudgeUnparseable(LitragError):
    """Judge response did not follow the machine-readable contract after retry."""


class ZeroClaims(LitragError):
    """Judge found no claims in the answer; score is a missing value, not 0."""


# --- ingest -----------------------------------------------------------------

class EmptyQuestion(LitragError):
    """Question text is empty."""


class ApiUnavailable(LitragError):
    """Article search API unreachable after retry."""


class MalformedFeed(LitragError):
    """Search API response is not parseable as an Atom feed."""


class DownloadFailed(LitragError):
    """PDF download failed; carries the article id."""

    def __init__(self, article_id: str, reason: str = ""):
        self.article_id = article_id
        super().__init__(f"download failed for {article_id}: {reason}" if reason
                         else f"download failed for {article_id}")


class ChecksumMismatch(LitragError):
    """Stored PDF bytes do not match the recorded checksum."""


class GrobidUnavailable(LitragError):
    """GROBID service unreachable."""


class GrobidRejected(LitragError):
    """GROBID returned a non-success status; body is attached."""

    def __init__(self, status: int, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(f"GROBID rejected request (status {status})")


class MalformedXml(LitragError):
    """TEI payload is not well-formed XML."""


class EmptyBody(LitragError):
    """No paragraph text survives TEI filtering."""


# --- embedding / index ------------------------------------------------------

class DimensionMismatch(LitragError):
    """Vector dimensionality differs from what the index/config expects."""


class EmptyIndex(LitragError):
    """Query issued against an index with no records."""


class CorruptFile(LitragError):
    """Persisted index failed checksum or structural validation."""


class VersionMismatch(LitragError):
    """Persisted index uses an unsupported format version."""


# --- evaluation / stats -----------------------------------------------------

class EmptyContext(LitragError):
    """Retrieval produced no chunks (warning-grade; answering continues)."""


class DegenerateGroup(LitragError):
    """A sample group has n < 2 or zero variance."""


class NonConvergence(LitragError):
    """Numerical integration did not reach the requested tolerance."""


class MismatchedSamples(LitragError):
    """Configurations do not share the same question set / replication count."""


class IoFailure(LitragError):
    """Dataset export could not be written."""
