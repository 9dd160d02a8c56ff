"""OAI-PMH 2.0 client."""

from dcqual.oai.client import (
    FetchPolicy,
    HarvestSummary,
    OaiClient,
    VerificationResult,
    harvest_list_records,
    harvest_many,
    identify,
    verify_endpoint,
)
from dcqual.oai.protocol import (
    Endpoint,
    FormatList,
    OaiVerb,
    PageRecord,
    RecordsPage,
    RepositoryIdentity,
    ResumptionToken,
    SetList,
    build_request,
    parse_response,
)

__all__ = [
    "Endpoint",
    "FetchPolicy",
    "FormatList",
    "HarvestSummary",
    "OaiClient",
    "OaiVerb",
    "PageRecord",
    "RecordsPage",
    "RepositoryIdentity",
    "ResumptionToken",
    "SetList",
    "VerificationResult",
    "build_request",
    "harvest_list_records",
    "harvest_many",
    "identify",
    "parse_response",
    "verify_endpoint",
]
