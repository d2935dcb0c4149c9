from database.models.certificates import DistinguishingSetCertificate, SquareRecord, TwinPairCertificate
from database.models.graph_header import GraphHeader
from database.models.results import CheckResult, ResultRow, ValidationReport
from database.models.transcript import GameConfig, RoundRecord, Transcript
