"""Entity clustering of EUTXO payment addresses (Cardano heuristics H1/H2)."""
from .address_model import (AddressInfo, AddressKind, ConflictingClassification, InternTable,
                            StakeAddressNotPayment, UnsupportedHeaderType, classify_header,
                            intern_address)
from .analytics import (ClusterSummary, DailyRow, DegenerateInput, PowerLawFit, daily_series,
                        fit_power_law, size_histogram, summarize)
from .clustering import BOTH, H1_ONLY, H2_ONLY, HeuristicSet, apply_h1, apply_h2, cluster_stream
from .ingestion import (IngestStats, MalformedLine, SchemaViolation, TransactionRecord,
                        parse_tx_line, stream_transactions)
from .simulator import EvalReport, SimParams, evaluate, generate_chain
from .union_find import DisjointSetForest, OutOfRange

__version__ = "0.1.0"
