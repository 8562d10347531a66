"""Phase-gate broadcasting over directed acyclic qudit networks."""

from .broadcast import (
    BroadcastResult,
    ProtocolTranscript,
    build_resource_state,
    edge_application_order,
    expected_sink_state,
    run_protocol,
    theta_effective,
)
from .dag import (
    DagNetwork,
    Edge,
    assign_dims,
    count_paths,
    reach,
    sinks,
    sources,
    topo_sort,
    validate,
)
from .prepare import (
    PrepState,
    build_prep_state,
    check_stabilizers,
    correction_operator,
    detach_vertex,
    measure_ancillas,
    prepare_resource,
)
from .qudit import Branch, Register, SiteLayout, fidelity, make_state

__version__ = "0.1.0"
