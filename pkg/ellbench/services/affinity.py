# ellbench/services/affinity.py

"""Hardware-subset strings, CPU topology detection and thread pin maps."""

import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import psutil

from ellbench.errors import ParseError, TopologyExceeded
from ellbench.models.perf_models import AffinityPolicy, CpuTopology, HwSubset, Placement

logger = logging.getLogger(__name__)

SYSFS_CPU = Path('/sys/devices/system/cpu')

_UNITS = {'s': 'sockets', 't': 'threads_per_core', 'c': 'cores_per_socket'}


def parse_subset(text: str) -> HwSubset:
    """
    Parse a subset string such as "2s,2t,24c".

    Tokens are <int><unit> with unit s (sockets), t (threads per core) or
    c (cores per socket), in any order, each at most once; missing units are 1.
    """
    counts = {}
    for raw in text.split(','):
        token = raw.strip()
        if len(token) < 2:
            raise ParseError(raw, "expected <count><unit>")
        digits, unit = token[:-1], token[-1].lower()
        if unit not in _UNITS:
            raise ParseError(raw, f"unknown unit {unit!r}, expected one of s, t, c")
        if not digits.isdigit():
            raise ParseError(raw, "count must be a positive integer")
        if unit in counts:
            raise ParseError(raw, f"unit {unit!r} given more than once")
        value = int(digits)
        if value < 1:
            raise ParseError(raw, "count must be >= 1")
        counts[unit] = value
    return HwSubset(**{_UNITS[unit]: value for unit, value in counts.items()})


def format_subset(subset: HwSubset) -> str:
    return f"{subset.sockets}s,{subset.threads_per_core}t,{subset.cores_per_socket}c"


def _read_int(path: Path) -> Optional[int]:
    try:
        return int(path.read_text().strip())
    except (OSError, ValueError):
        return None


def detect_topology() -> CpuTopology:
    """
    Read the kernel's CPU enumeration (physical_package_id / core_id).

    Without socket information the machine is treated as one socket whose
    cores are the usable logical CPUs; scatter then behaves like compact.
    """
    if hasattr(os, 'sched_getaffinity'):
        cpus = sorted(os.sched_getaffinity(0))
    else:
        cpus = list(range(psutil.cpu_count(logical=True) or 1))

    sockets: Dict[int, Dict[int, List[int]]] = {}
    for cpu in cpus:
        topo = SYSFS_CPU / f'cpu{cpu}' / 'topology'
        package = _read_int(topo / 'physical_package_id')
        core = _read_int(topo / 'core_id')
        if package is None or core is None:
            logger.warning("CPU topology information not available; treating machine as one socket")
            return CpuTopology((tuple((cpu,) for cpu in cpus),))
        sockets.setdefault(package, {}).setdefault(core, []).append(cpu)

    layout = tuple(
        tuple(tuple(sorted(sockets[s][c])) for c in sorted(sockets[s]))
        for s in sorted(sockets)
    )
    topology = CpuTopology(layout)
    logger.debug(f"Detected topology {topology.to_dict()}")
    return topology


def _check_fits(subset: HwSubset, topology: CpuTopology):
    limits = (
        ('sockets', subset.sockets, topology.sockets),
        ('cores per socket', subset.cores_per_socket, topology.cores_per_socket),
        ('threads per core', subset.threads_per_core, topology.threads_per_core),
    )
    for name, wanted, present in limits:
        if wanted > present:
            raise TopologyExceeded(f"Requested {wanted} {name} but only {present} present")


def placement_order(policy: AffinityPolicy, topology: CpuTopology) -> List[Tuple[int, int, int]]:
    """
    (socket, core, thread) slots in the order workers receive them.

    compact fills socket 0 (core by core, sibling threads together) before the
    next socket; scatter sends worker i to socket i mod sockets, spreading over
    cores before using sibling threads. Without a subset every logical CPU of
    the machine gets a slot, even when sockets or cores differ in size.
    """
    if policy.subset is None:
        return _machine_order(policy.placement, topology)

    subset = policy.subset
    _check_fits(subset, topology)
    S, C, T = subset.sockets, subset.cores_per_socket, subset.threads_per_core

    if policy.placement is Placement.COMPACT:
        return [(s, c, t) for s in range(S) for c in range(C) for t in range(T)]

    per_socket = [[(s, c, t) for t in range(T) for c in range(C)] for s in range(S)]
    return [per_socket[i % S][i // S] for i in range(S * C * T)]


def _machine_order(placement: Placement, topology: CpuTopology) -> List[Tuple[int, int, int]]:
    layout = topology.layout
    if placement is Placement.COMPACT:
        return [(s, c, t) for s, cores in enumerate(layout)
                for c, threads in enumerate(cores) for t in range(len(threads))]

    per_socket = []
    for s, cores in enumerate(layout):
        depth = max(len(threads) for threads in cores)
        per_socket.append([(s, c, t) for t in range(depth)
                           for c, threads in enumerate(cores) if t < len(threads)])

    # round robin over sockets; a socket that runs out drops out of the rotation
    slots = []
    for rank in range(max(len(socket) for socket in per_socket)):
        slots.extend(socket[rank] for socket in per_socket if rank < len(socket))
    return slots


def resolve_pin_map(policy: AffinityPolicy, topology: CpuTopology,
                    workers: Optional[int] = None) -> List[Tuple[int, int]]:
    """
    Assign each worker exactly one logical CPU.

    Args:
        policy: placement and hardware subset (whole machine when subset is None)
        topology: machine description
        workers: number of workers; defaults to the subset's full worker count

    Returns:
        list of (worker, logical CPU)
    """
    slots = placement_order(policy, topology)
    workers = len(slots) if workers is None else workers
    if workers > len(slots):
        raise TopologyExceeded(f"Requested {workers} workers but the subset provides {len(slots)}")
    pin_map = [(w, topology.layout[s][c][t]) for w, (s, c, t) in enumerate(slots[:workers])]
    logger.debug(f"Pin map ({policy.placement.value}): {pin_map}")
    return pin_map
