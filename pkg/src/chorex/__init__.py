"""Choreography extraction and endpoint projection for communicating processes.

The package works with two little languages: *choreographies* describe a
protocol globally (`p.e -> q; ...`), and *networks* give each process its
own behaviour (`p { q!e; ... } | q { p?; ... }`).  `epp` compiles the
first into the second; `extract` recovers a choreography from a network
by searching its graph of possible behaviours, including for infinite
(recursive) protocols and asynchronous (buffered) messaging.
"""

from .abstract import AnnNet, LiftedProc, lift, render_annet, step_network_abstract
from .epp import MergeError, ProjectionError, epp, merge, procedure_usage
from .equivalence import (
    async_can_replay, bounded_bisim, sample_states, sync_traces_embed,
    trace_set,
)
from .extraction import (
    ASYNC, AesGraph, NotExtractable, NotFinite, ResourceLimit, SYNC,
    aes_node_bound, build_aes, extract, extract_finite_rewriting,
    find_valid_seg, inline_definitions, seg_to_choreography, to_dot,
)
from .multicom import (
    MulticomFailure, MulticomResult, compute_multicom, normalize_multicom,
    step_network_abstract_async,
)
from .parsing import ParseError, dangling_references, parse_choreography, parse_network
from .printing import (
    render, render_behaviour, render_choreography, render_network,
    render_program, render_state,
)
from .semantics import (
    ComLabel, DeqLabel, ElseLabel, EnqLabel, MultiLabel, Queues, SelLabel,
    State, ThenLabel, UnboundProcedure, eval_expr, render_label, state,
    step_choreography, step_network_async, step_network_sync, struct_equiv,
)
from .terms import (
    Branch, Call, Choreography, Cond, CondSelf, Constant, Def, End,
    Expression, Interaction, InvalidTerm, Literal, Network, Program, Recv,
    SELF, Select, Selection, Send, Seq, Stuck, UNIT, Unit, ValueCom,
    network, network_size,
)

__version__ = "0.1.0"
