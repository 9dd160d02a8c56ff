"""Exception hierarchy shared by every dcqual module."""

from __future__ import annotations

# Closed set of OAI-PMH 2.0 error codes.
OAI_ERROR_CODES = frozenset(
    {
        "badArgument",
        "badResumptionToken",
        "badVerb",
        "cannotDisseminateFormat",
        "idDoesNotExist",
        "noRecordsMatch",
        "noMetadataFormats",
        "noSetHierarchy",
    }
)


class DcqualError(Exception):
    """Base class for all errors raised by this package."""


class IllegalArgument(DcqualError, ValueError):
    """A request was built with parameters the protocol does not allow."""


class ResponseError(DcqualError):
    """The response payload could not be interpreted."""


class MalformedXml(ResponseError):
    pass


class NotOaiPmh(ResponseError):
    pass


class MissingElement(ResponseError):
    pass


class OaiProtocolError(DcqualError):
    """An ``<error>`` element returned by a data provider."""

    def __init__(self, code: str, message: str = ""):
        if code not in OAI_ERROR_CODES:
            raise ValueError(f"unknown OAI-PMH error code {code!r}")
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class NetworkError(DcqualError):
    """Transport failure that survived every retry."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class UnsupportedVersion(DcqualError):
    pass


class StoreError(DcqualError, OSError):
    """Corpus store could not be read or written."""


class StoreLocked(StoreError):
    pass


class EmptyCorpus(DcqualError, ValueError):
    pass


class EmptyInput(DcqualError, ValueError):
    pass


class RuleFileError(DcqualError, ValueError):
    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class BindError(DcqualError, OSError):
    pass
