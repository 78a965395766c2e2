"""Exception hierarchy shared by every evidencer module.

Everything a caller can reasonably handle derives from ``EvidencerError``.
Input problems (bad records, bad parameters, empty corpora) are
``ValidationError`` subclasses; network failures are ``TransportError``.
The CLI maps the two families onto exit codes 2 and 3.
"""


class EvidencerError(Exception):
    pass


class ValidationError(EvidencerError, ValueError):
    pass


class TransportError(EvidencerError):
    pass


# corpus
class MissingDate(ValidationError):
    pass


class SchemaError(ValidationError):
    def __init__(self, message, line=None, field=None):
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


# acquire
class NotFound(EvidencerError):
    pass


class ParseError(ValidationError):
    pass


class MalformedResponse(ValidationError):
    pass


# lingua
class UntrainedModel(ValidationError):
    pass


class EmptyCorpus(ValidationError):
    pass


class EmptyTraining(ValidationError):
    pass


# sentiment
class EmptyLexicon(ValidationError):
    pass


# features
class EmptyText(ValidationError):
    pass


# models / pipeline
class SingleClass(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class ModelMismatch(ValidationError):
    pass
