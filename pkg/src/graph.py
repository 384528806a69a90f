"""LangGraph workflow builder: one linear stage chain per subcommand."""

from __future__ import annotations

import logging

from langgraph.graph import END, StateGraph

from src.nodes.cluster import cluster_node
from src.nodes.code import code_node
from src.nodes.ena import ena_node
from src.nodes.features import features_node
from src.nodes.ingest import ingest_node
from src.nodes.report import report_node
from src.nodes.stats import stats_node
from src.config import RunConfig
from src.state import PipelineState

logger = logging.getLogger(__name__)

NODES = {
    "ingest": ingest_node,
    "features": features_node,
    "cluster": cluster_node,
    "code": code_node,
    "ena": ena_node,
    "stats": stats_node,
    "report": report_node,
}

STAGES: dict[str, tuple[str, ...]] = {
    "ingest": ("ingest",),
    "features": ("ingest", "features"),
    "cluster": ("ingest", "features", "cluster"),
    "code": ("ingest", "code"),
    "ena": ("ingest", "features", "cluster", "code", "ena"),
    "stats": ("ingest", "features", "cluster", "stats"),
    "all": ("ingest", "features", "cluster", "code", "ena", "stats", "report"),
}


def _continue_or_stop(state: PipelineState) -> str:
    return "stop" if state.error else "next"


def build_graph(command: str = "all") -> StateGraph:
    """Build the stage chain for a subcommand.

    Flow (``all``):
        START → ingest → features → cluster → code → ena → stats → report → END
    Any stage that sets ``error`` routes straight to END.
    """
    stages = STAGES[command]
    graph = StateGraph(PipelineState)
    for name in stages:
        graph.add_node(name, NODES[name])

    graph.set_entry_point(stages[0])
    for current, following in zip(stages, stages[1:]):
        graph.add_conditional_edges(current, _continue_or_stop, {"next": following, "stop": END})
    graph.add_edge(stages[-1], END)
    logger.debug("Built graph for %s: %s", command, " -> ".join(stages))
    return graph


def run_pipeline(config: RunConfig, command: str = "all") -> PipelineState:
    result = build_graph(command).compile().invoke({"config": config})
    if isinstance(result, PipelineState):
        return result
    return PipelineState(**result)
