from enum import Enum

class TransformMethod(str, Enum):

    VA = "va"
    DIRECT = "direct"
    INDIRECT = "indirect"

    def __str__(self):
        return self.value

class MarkStrategy(str, Enum):

    TWO_SCAN = "two_scan"
    ONE_SCAN = "one_scan"

    def __str__(self):
        return self.value

class Frontier(str, Enum):

    FIFO = "fifo"
    LIFO = "lifo"

    def __str__(self):
        return self.value

class GcMode(str, Enum):

    NO_GC = "nogc"
    GDP = "gdp"      # detection only, nothing reclaimed
    LGC = "lgc"      # LGC+GDP
    CDGC = "cdgc"    # LGC+GDP+CDGC

    def __str__(self):
        return self.value

    @property
    def label(self) -> str:
        return {
            "nogc": "NO-GC",
            "gdp": "GDP",
            "lgc": "LGC+GDP",
            "cdgc": "LGC+GDP+CDGC",
        }[self.value]

class PartitionPolicy(str, Enum):

    LOCALITY = "locality"
    ROUND_ROBIN_BFS = "round_robin_bfs"

    def __str__(self):
        return self.value

class EventKind(str, Enum):

    SPAWN = "spawn"
    ADD_REF = "add_ref"
    DROP_REF = "drop_ref"
    SEND = "send"
    BLOCK = "block"
    UNBLOCK = "unblock"
    TERMINATE = "terminate"

    def __str__(self):
        return self.value

    @property
    def arity(self) -> int:
        if self in (EventKind.BLOCK, EventKind.UNBLOCK, EventKind.TERMINATE):
            return 1
        return 2

class DivergenceClass(str, Enum):

    BLOCKED_RECEIVER = "a"        # VA garbage, oracle live, actor blocked
    INACTIVE_REFERENCER = "b"     # VA live, oracle garbage, references a live actor
    UNCLASSIFIED = "c"

    def __str__(self):
        return self.value

class Workload(str, Enum):

    FIB = "fib"
    NQ = "nq"
    MX = "mx"

    def __str__(self):
        return self.value

class OutputFormat(str, Enum):

    JSON = "json"
    TABLE = "table"
    DOT = "dot"
    CSV = "csv"

    def __str__(self):
        return self.value
