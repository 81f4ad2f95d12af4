"""Error types shared across the service.

Every error carries a stable ``code`` (the wire-visible identifier) and the
HTTP status the gateway maps it to. Messages are human text only; they never
include secrets or stack traces.
"""


class SafeguardError(Exception):
    code = "Internal"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# treestore

class InvalidPath(SafeguardError):
    code = "InvalidPath"
    http_status = 400


class InvalidValue(SafeguardError):
    code = "InvalidValue"
    http_status = 400


class DuplicateHandler(SafeguardError):
    code = "DuplicateHandler"
    http_status = 409


class CorruptDocument(SafeguardError):
    code = "CorruptDocument"
    http_status = 500


# auth

class EmailTaken(SafeguardError):
    code = "EmailTaken"
    http_status = 409


class WeakPassword(SafeguardError):
    code = "WeakPassword"
    http_status = 400


class InvalidEmail(SafeguardError):
    code = "InvalidEmail"
    http_status = 400


class UnknownToken(SafeguardError):
    code = "UnknownToken"
    http_status = 404


class ExpiredToken(SafeguardError):
    code = "ExpiredToken"
    http_status = 410


class AlreadyUsed(SafeguardError):
    code = "AlreadyUsed"
    http_status = 409


class BadCredentials(SafeguardError):
    code = "BadCredentials"
    http_status = 401


class EmailUnverified(SafeguardError):
    code = "EmailUnverified"
    http_status = 403


class Unauthenticated(SafeguardError):
    code = "Unauthenticated"
    http_status = 401


class Forbidden(SafeguardError):
    code = "Forbidden"
    http_status = 403


# geo

class InvalidCoordinates(SafeguardError):
    code = "InvalidCoordinates"
    http_status = 400


class UnreadableFile(SafeguardError):
    code = "UnreadableFile"
    http_status = 400


class EmptyIndex(SafeguardError):
    code = "EmptyIndex"
    http_status = 409


# sos

class TooManyContacts(SafeguardError):
    code = "TooManyContacts"
    http_status = 400


class EmptyList(SafeguardError):
    code = "EmptyList"
    http_status = 400


class NoContactsSet(SafeguardError):
    code = "NoContactsSet"
    http_status = 409


# chat

class EmptyQuery(SafeguardError):
    code = "EmptyQuery"
    http_status = 400


class UnknownRecipient(SafeguardError):
    code = "UnknownRecipient"
    http_status = 404


class SelfMessage(SafeguardError):
    code = "SelfMessage"
    http_status = 400


class EmptyBody(SafeguardError):
    code = "EmptyBody"
    http_status = 400


class BodyTooLong(SafeguardError):
    code = "BodyTooLong"
    http_status = 400


class NotParticipant(SafeguardError):
    code = "NotParticipant"
    http_status = 403


class UnknownCheckpoint(SafeguardError):
    code = "UnknownCheckpoint"
    http_status = 400


class UnknownUser(SafeguardError):
    code = "UnknownUser"
    http_status = 404


# gateway

class BindFailure(SafeguardError):
    code = "BindFailure"
    http_status = 500


class UnknownCommand(SafeguardError):
    code = "UnknownCommand"
    http_status = 400
