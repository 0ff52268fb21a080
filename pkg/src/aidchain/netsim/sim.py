"""Deterministic discrete-event network simulator.

All nodes run in-process; the only clock is simulated milliseconds and
the only randomness is one seeded generator owned by the simulator, so
a (config, programs, faults) triple always reproduces the same event
trace byte for byte. Events at equal timestamps are processed in
insertion order.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from ..crypto import keccak256


class UnknownNodeError(KeyError):
    pass


class UnknownDirectiveError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    side_a: frozenset
    side_b: frozenset
    start_ms: int
    end_ms: int

    def separates(self, src: str, dst: str, now_ms: int) -> bool:
        if not self.start_ms <= now_ms < self.end_ms:
            return False
        return (src in self.side_a and dst in self.side_b) or (
            src in self.side_b and dst in self.side_a
        )


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    latency_min: int = 10  # ms
    latency_max: int = 50
    drop_rate: float = 0.0
    partitions: tuple[Partition, ...] = ()

    def __post_init__(self):
        if self.latency_min > self.latency_max:
            raise ValueError("latency_min must not exceed latency_max")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop_rate must be a probability")


@dataclass(frozen=True)
class TraceRecord:
    time_ms: int
    kind: str
    src: str
    dst: str
    msg_type: str
    msg_hash: str

    def format_line(self) -> str:
        return "\t".join(
            (str(self.time_ms), self.kind, self.src, self.dst, self.msg_type, self.msg_hash)
        )


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    end_time_ms: int = 0
    limit_hit: bool = False
    predicate_met: bool = False

    def to_text(self) -> str:
        return "\n".join(r.format_line() for r in self.records) + "\n"


class Program(Protocol):
    """A node's behavior; handlers receive a context bound to the node."""

    def start(self, ctx: "NodeContext") -> None: ...
    def on_deliver(self, ctx: "NodeContext", src: str, message) -> None: ...
    def on_timer(self, ctx: "NodeContext", timer_id) -> None: ...


class NodeContext:
    """Per-node facade handed to program handlers."""

    def __init__(self, sim: "Simulator", name: str) -> None:
        self._sim = sim
        self.name = name

    @property
    def now(self) -> int:
        return self._sim.now

    @property
    def peers(self) -> list[str]:
        return [n for n in self._sim.node_names() if n != self.name]

    def send(self, to: str, message) -> None:
        self._sim.send(self.name, to, message)

    def set_timer(self, timer_id, delay_ms: int) -> None:
        self._sim.set_timer(self.name, timer_id, delay_ms)

    def rng(self) -> random.Random:
        return self._sim.node_rng(self.name)


def _default_describe(message) -> tuple[str, str]:
    try:
        from ..consensus import MESSAGE_NAMES, encode_message

        name = MESSAGE_NAMES.get(type(message))
        if name is not None:
            return name, keccak256(encode_message(message)).hex()[:16]
    except ImportError:  # pragma: no cover
        pass
    return type(message).__name__, keccak256(repr(message).encode()).hex()[:16]


class Simulator:
    def __init__(self, config: SimConfig | None = None,
                 describe: Callable[[object], tuple[str, str]] = _default_describe) -> None:
        self.config = config or SimConfig()
        self.now = 0
        self._rng = random.Random(self.config.seed)
        self._describe = describe
        self._programs: dict[str, Program] = {}
        self._contexts: dict[str, NodeContext] = {}
        self._node_rngs: dict[str, random.Random] = {}
        self._heap: list[tuple[int, int, tuple]] = []
        self._seq = 0
        self._crashed: set[str] = set()
        self._extra_delay: dict[str, int] = {}
        self._started = False
        self.trace = Trace()

    # -- topology ---------------------------------------------------------------

    def register(self, name: str, program: Program) -> None:
        if name in self._programs:
            raise ValueError(f"node {name} already registered")
        self._programs[name] = program
        self._contexts[name] = NodeContext(self, name)
        index = len(self._node_rngs)
        sub_seed = int.from_bytes(
            keccak256(f"{self.config.seed}:{index}".encode())[:8], "big"
        )
        self._node_rngs[name] = random.Random(sub_seed)

    def node_names(self) -> list[str]:
        return list(self._programs)

    def node_rng(self, name: str) -> random.Random:
        return self._node_rngs[name]

    def _require(self, name: str) -> None:
        if name not in self._programs:
            raise UnknownNodeError(name)

    # -- event injection ----------------------------------------------------------

    def _push(self, time_ms: int, event: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time_ms, self._seq, event))

    def send(self, src: str, dst: str, message) -> None:
        self._require(src)
        self._require(dst)
        if src in self._crashed:
            return
        msg_type, msg_hash = self._describe(message)
        for partition in self.config.partitions:
            if partition.separates(src, dst, self.now):
                self._record("drop_partition", src, dst, msg_type, msg_hash)
                return
        if self.config.drop_rate > 0.0 and self._rng.random() < self.config.drop_rate:
            self._record("drop_rate", src, dst, msg_type, msg_hash)
            return
        latency = self._rng.randint(self.config.latency_min, self.config.latency_max)
        latency += self._extra_delay.get(src, 0)
        self._push(self.now + latency, ("deliver", dst, src, message))

    def set_timer(self, node: str, timer_id, delay_ms: int) -> None:
        self._require(node)
        self._push(self.now + delay_ms, ("timer", node, timer_id))

    def inject_fault(self, directive: tuple) -> None:
        """crash(node, at_ms) | byzantine-equivocate(node) | delay-all(node, extra_ms)."""
        kind = directive[0]
        if kind == "crash":
            _, node, at_ms = directive
            self._require(node)
            if at_ms <= self.now:
                self._crashed.add(node)
                self._record("fault", "-", node, "crash", "-")
            else:
                self._push(at_ms, ("fault", directive))
        elif kind == "byzantine-equivocate":
            _, node = directive
            self._require(node)
            program = self._programs[node]
            hook = getattr(program, "enable_equivocation", None)
            if hook is None:
                raise UnknownDirectiveError(
                    f"program of node {node} does not support equivocation"
                )
            hook()
            self._record("fault", "-", node, "byzantine-equivocate", "-")
        elif kind == "delay-all":
            _, node, extra_ms = directive
            self._require(node)
            self._extra_delay[node] = self._extra_delay.get(node, 0) + extra_ms
            self._record("fault", "-", node, f"delay-all:{extra_ms}", "-")
        else:
            raise UnknownDirectiveError(str(directive))

    # -- the loop -----------------------------------------------------------------

    def _record(self, kind: str, src: str, dst: str, msg_type: str, msg_hash: str) -> None:
        self.trace.records.append(
            TraceRecord(self.now, kind, src, dst, msg_type, msg_hash)
        )

    def _start_programs(self) -> None:
        if self._started:
            return
        self._started = True
        for name, program in self._programs.items():
            if name not in self._crashed:
                program.start(self._contexts[name])

    def run_until(
        self,
        predicate: Optional[Callable[["Simulator"], bool]] = None,
        time_limit_ms: int = 60_000,
    ) -> Trace:
        """Process events in (time, insertion) order; returns the trace."""
        self._start_programs()
        if predicate is not None and predicate(self):
            self.trace.predicate_met = True
            self.trace.end_time_ms = self.now
            return self.trace
        while self._heap:
            time_ms, _, event = self._heap[0]
            if time_ms > time_limit_ms:
                break
            heapq.heappop(self._heap)
            self.now = max(self.now, time_ms)
            self._dispatch(event)
            if predicate is not None and predicate(self):
                self.trace.predicate_met = True
                self.trace.end_time_ms = self.now
                return self.trace
        self.trace.limit_hit = True
        self.trace.end_time_ms = time_limit_ms
        self.now = time_limit_ms
        return self.trace

    def _dispatch(self, event: tuple) -> None:
        kind = event[0]
        if kind == "deliver":
            _, dst, src, message = event
            msg_type, msg_hash = self._describe(message)
            if dst in self._crashed:
                self._record("drop_crashed", src, dst, msg_type, msg_hash)
                return
            self._record("deliver", src, dst, msg_type, msg_hash)
            self._programs[dst].on_deliver(self._contexts[dst], src, message)
        elif kind == "timer":
            _, node, timer_id = event
            if node in self._crashed:
                return
            self._record("timer", node, node, str(timer_id), "-")
            self._programs[node].on_timer(self._contexts[node], timer_id)
        elif kind == "fault":
            directive = event[1]
            if directive[0] == "crash":
                self._crashed.add(directive[1])
                self._record("fault", "-", directive[1], "crash", "-")
