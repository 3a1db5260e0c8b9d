"""Conversation execution.

One engine serves one trained application: it owns the shared user and
community state and runs any number of sessions against the immutable
bundle and pack.  A session is driven turn by turn; each turn runs the
fixed pipeline (turn reset, silence check, entity recognition, skimming,
masking, routing, graph traversal) and produces a TurnRecord.

Determinism contract: identical bundle, pack, seed, user id and turn
sequence reproduce the exact same responses and records (timestamps aside).
"""

from __future__ import annotations

import json
import logging
import random
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List, Optional, Tuple

from ..model.conditions import EvalError, eval_condition
from ..model.nodes import DialogueBundle, NodeKey, SubDialogue, node_key_str
from ..model.validate import PLACEHOLDER_RE
from ..nlu.entities import recognize_entities, span_to_dict
from ..nlu.masking import mask_entities
from ..nlu.pack import TrainedNluPack
from ..nlu.routing import SCOPE_GLOBAL, SCOPE_OOD, masking_types, route_and_classify
from ..nrg import (
    ACT_QUESTION,
    ACT_STATEMENT,
    ACT_STATEMENT_THEN_QUESTION,
    DEFAULT_GENERATOR,
    Generator,
    NrgRequest,
)
from ..skimmer import skim
from ..store import DataStore, SessionMeta, TurnRecord
from .attributes import AttributeStore, PlatformState, UndeclaredAttributeError

logger = logging.getLogger(__name__)

MAX_VISITS_PER_TURN = 200

SITUATION_SILENCE = "Silence"
SITUATION_ERROR = "Error"
SITUATION_OOD = "OutOfDomain"


class SessionEndedError(RuntimeError):
    pass


@dataclass
class Frame:
    dialogue_id: str
    return_node: Optional[NodeKey]  # where the parent resumes when this pops


@dataclass
class NrgPending:
    mode: str  # "ood" | "grounding"
    resume: Optional[NodeKey]  # node to await at (ood) or continue from (grounding)


@dataclass
class Session:
    session_id: str
    user_id: str
    community: str
    client_tag: str
    seed: int
    store: AttributeStore
    rng: random.Random
    stack: List[Frame] = field(default_factory=list)
    awaiting: Optional[NodeKey] = None  # User Input node, when paused for input
    nrg_pending: Optional[NrgPending] = None
    discussed_labels: set = field(default_factory=set)
    discussed_entities: set = field(default_factory=set)
    history: List[Tuple[str, str]] = field(default_factory=list)  # (speaker, text)
    turn_index: int = -1
    ended: bool = False
    ended_reason: Optional[str] = None
    started_at: str = ""
    ended_at: Optional[str] = None


@dataclass
class TurnInput:
    utterance: str  # empty string encodes silence
    client_tag: str = ""
    received_at: Optional[str] = None


@dataclass
class TurnResult:
    responses: List[str]
    ended: bool
    record: TurnRecord


class _TurnContext:
    def __init__(self):
        self.responses: List[str] = []
        self.traversed: List[NodeKey] = []
        self.visits = 0
        self.attribute_diff: List[dict] = []
        self.error: Optional[str] = None
        self.handling_error = False
        self.nrg_used: Optional[dict] = None


def render_value(value) -> str:
    """How attribute values appear inside rendered responses."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    return str(value)


def select_dialogue(
    bundle: DialogueBundle,
    pool: List[str],
    discussed_labels: set,
    discussed_entities: set,
    attr_view,
) -> Optional[str]:
    """Constrained argmax over the eligible pool.

    A candidate qualifies when its starting condition evaluates to true
    (conditions that fail to evaluate disqualify it and are logged); among
    qualifiers the one sharing the most labels and entity tags with the
    session wins, earliest pool entry first on ties.  Returns None when
    nothing qualifies.
    """
    best_id = None
    best_score = -1
    for dlg_id in pool:
        dialogue = bundle.dialogue(dlg_id)
        if dialogue is None:
            continue
        if dialogue.starting_condition is not None:
            try:
                verdict = eval_condition(dialogue.starting_condition, attr_view)
            except EvalError as err:
                logger.warning("selector: condition for %s failed: %s", dlg_id, err)
                continue
            if verdict is not True:
                continue
        overlap = (dialogue.labels & discussed_labels) | (dialogue.entity_tags & discussed_entities)
        score = len(overlap)
        if score > best_score:
            best_score = score
            best_id = dlg_id
    return best_id


class Engine:
    """Runs sessions of one trained application."""

    def __init__(
        self,
        bundle: DialogueBundle,
        pack: TrainedNluPack,
        generator: Optional[Generator] = None,
        store: Optional[DataStore] = None,
        platform: Optional[PlatformState] = None,
        app_id: str = "app",
        clock=None,
    ):
        self.bundle = bundle
        self.pack = pack
        self.generator = generator or DEFAULT_GENERATOR
        self.store = store if store is not None else DataStore()
        self.platform = platform or PlatformState()
        self.app_id = app_id
        self.clock = clock or time.time
        self.declarations = bundle.declared_attributes()

    # -- session lifecycle ---------------------------------------------------

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    def start_session(
        self,
        user_id: str = "anonymous",
        community: str = "default",
        client_tag: str = "text",
        seed: Optional[int] = None,
        session_id: Optional[str] = None,
    ) -> Tuple[Session, TurnResult]:
        """Create a session and run the main dialogue up to the first input
        pause (or straight to the end for input-less bundles)."""
        seed = self.bundle.config.seed if seed is None else seed
        session = Session(
            session_id=session_id or uuid.uuid4().hex,
            user_id=user_id,
            community=community,
            client_tag=client_tag,
            seed=seed,
            store=AttributeStore(self.declarations, self.platform, user_id, community),
            rng=random.Random(seed),
            started_at=self._now_iso(),
        )
        main = self.bundle.main
        session.stack.append(Frame(main.id, None))
        self._note_dialogue_entered(session, main)

        self.store.record_session(
            SessionMeta(
                session_id=session.session_id,
                app_id=self.app_id,
                user_id=user_id,
                community=community,
                client=client_tag,
                seed=seed,
                started_at=session.started_at,
            )
        )

        started = self.clock()
        ctx = _TurnContext()
        session.turn_index = 0
        self._traverse(session, ctx, (main.id, main.enter_node.id))
        record = self._finish_turn(session, ctx, raw_utterance="", started=started)
        return session, TurnResult(ctx.responses, session.ended, record)

    def process_turn(self, session: Session, turn_input) -> TurnResult:
        """Run one full turn; ``turn_input`` is a TurnInput or a plain string."""
        if isinstance(turn_input, str):
            turn_input = TurnInput(turn_input)
        if session.ended:
            raise SessionEndedError(f"session {session.session_id} has ended")
        if session.awaiting is None and session.nrg_pending is None:
            raise SessionEndedError(f"session {session.session_id} is not awaiting input")

        started = self.clock()
        session.turn_index += 1
        session.store.begin_turn()
        ctx = _TurnContext()
        utterance = turn_input.utterance

        if utterance == "":
            self._handle_silence(session, ctx)
            return self._result(session, ctx, "", "", [], None, [], started)

        session.history.append(("user", utterance))

        if session.nrg_pending is not None:
            spans, skimmer_writes = self._observe_utterance(session, ctx, utterance)
            self._continue_nrg(session, ctx)
            return self._result(session, ctx, utterance, utterance, spans, None, skimmer_writes, started)

        spans, skimmer_writes = self._observe_utterance(session, ctx, utterance)

        context_key = session.awaiting
        path = self._dialogue_path(session)
        allowed = masking_types(self.bundle, context_key, path)
        masked = mask_entities(utterance, spans, allowed)

        routing = route_and_classify(masked, context_key, path, self.pack)

        if routing.scope == SCOPE_OOD:
            self._handle_ood(session, ctx)
        else:
            target = routing.chosen_intent
            if routing.scope == SCOPE_GLOBAL and target[0] != session.stack[-1].dialogue_id:
                if not self._unwind_to(session, target[0]):
                    self._route_error(session, ctx, f"global intent owner {target[0]!r} not on stack")
                    target = None
            if target is not None:
                session.awaiting = None
                self._traverse(session, ctx, target)

        return self._result(session, ctx, utterance, masked, spans, routing, skimmer_writes, started)

    # -- per-turn helpers ----------------------------------------------------

    def _observe_utterance(self, session: Session, ctx: _TurnContext, utterance: str):
        """Context-independent per-turn analysis: entities, then skimming."""
        spans = recognize_entities(utterance, list(self.bundle.entity_rules))
        for span in spans:
            session.discussed_entities.add(span.type_name)
            if span.type_name not in session.store.turn:  # leftmost span per type wins
                self._write_attribute(session, ctx, "turn", span.type_name, span.normalized)

        writes = []
        for ref, value in skim(utterance, list(self.bundle.skimmer_rules)):
            self._write_attribute(session, ctx, ref.scope, ref.name, value)
            writes.append({"attribute": str(ref), "value": value})
        return spans, writes

    def _write_attribute(self, session: Session, ctx: _TurnContext, scope, name, value) -> None:
        old = session.store.set(scope, name, value)
        ctx.attribute_diff.append({"scope": scope, "name": name, "old": old, "new": value})

    def _dialogue_path(self, session: Session) -> List[str]:
        return [frame.dialogue_id for frame in reversed(session.stack)]

    def _note_dialogue_entered(self, session: Session, dialogue: SubDialogue) -> None:
        session.discussed_labels |= dialogue.labels
        session.discussed_entities |= dialogue.entity_tags

    def _unwind_to(self, session: Session, dialogue_id: str) -> bool:
        for idx in range(len(session.stack) - 1, -1, -1):
            if session.stack[idx].dialogue_id == dialogue_id:
                del session.stack[idx + 1 :]
                return True
        return False

    def _find_global_action(self, session: Session, situation: str) -> Optional[NodeKey]:
        for frame in reversed(session.stack):
            dialogue = self.bundle.dialogue(frame.dialogue_id)
            if dialogue is None:
                continue
            action = dialogue.global_action(situation)
            if action is not None:
                return (dialogue.id, action.id)
        return None

    def _jump_to_action(self, session: Session, ctx: _TurnContext, key: NodeKey) -> None:
        if key[0] != session.stack[-1].dialogue_id:
            self._unwind_to(session, key[0])
        session.awaiting = None
        self._traverse(session, ctx, key)

    def _handle_silence(self, session: Session, ctx: _TurnContext) -> None:
        key = self._find_global_action(session, SITUATION_SILENCE)
        if key is None:
            # Nothing configured: stay at the current input, say nothing.
            return
        # A silence jump re-anchors the flow; a half-finished generated
        # exchange cannot resume after the stack may have unwound.
        session.nrg_pending = None
        self._jump_to_action(session, ctx, key)

    def _handle_ood(self, session: Session, ctx: _TurnContext) -> None:
        input_key = session.awaiting
        dialogue = self.bundle.dialogue(input_key[0])
        node = dialogue.node(input_key[1])
        local = node.payload.local_ood_action
        if local is not None and dialogue.node(local) is not None:
            self._jump_to_action(session, ctx, (dialogue.id, local))
            return
        key = self._find_global_action(session, SITUATION_OOD)
        if key is not None:
            self._jump_to_action(session, ctx, key)
            return
        # No handler anywhere on the stack: generate a statement+question,
        # wait for the user, and return to the graph next turn.
        response = self.generator.generate(
            NrgRequest(tuple(session.history), ACT_STATEMENT_THEN_QUESTION)
        )
        ctx.responses.append(response.text)
        session.history.append(("bot", response.text))
        ctx.nrg_used = {"act": response.act, "fallback": response.fallback}
        session.nrg_pending = NrgPending(mode="ood", resume=input_key)

    def _continue_nrg(self, session: Session, ctx: _TurnContext) -> None:
        pending = session.nrg_pending
        session.nrg_pending = None
        response = self.generator.generate(NrgRequest(tuple(session.history), ACT_STATEMENT))
        ctx.responses.append(response.text)
        session.history.append(("bot", response.text))
        ctx.nrg_used = {"act": response.act, "fallback": response.fallback}
        if pending.mode == "ood":
            # The interrupted User Input keeps waiting.
            session.awaiting = pending.resume
            return
        # Grounding exchange: traversal resumes along the Speech node's edge.
        session.awaiting = None
        if pending.resume is None:
            self._route_error(session, ctx, "grounding Speech node has no continuation")
            return
        self._traverse(session, ctx, pending.resume)

    def _handle_error(self, session: Session, ctx: _TurnContext, message: str) -> Optional[NodeKey]:
        """Route to the nearest global Error action; without one the session
        ends with the error flag set.  Returns the node to continue at."""
        if ctx.error is None:
            ctx.error = message
        logger.warning("session %s: %s", session.session_id, message)
        if ctx.handling_error:
            self._end_session(session, "error")
            return None
        ctx.handling_error = True
        key = self._find_global_action(session, SITUATION_ERROR)
        if key is None:
            self._end_session(session, "error")
            return None
        if key[0] != session.stack[-1].dialogue_id:
            self._unwind_to(session, key[0])
        session.awaiting = None
        ctx.visits = 0  # the recovery branch gets its own visit budget
        return key

    def _route_error(self, session: Session, ctx: _TurnContext, message: str) -> None:
        """Like _handle_error, for call sites outside the traversal loop."""
        key = self._handle_error(session, ctx, message)
        if key is not None:
            self._traverse(session, ctx, key)

    def _end_session(self, session: Session, reason: str) -> None:
        session.ended = True
        session.ended_reason = reason
        session.ended_at = self._now_iso()

    # -- traversal -----------------------------------------------------------

    def _render_speech(self, session: Session, node) -> str:
        responses = node.payload.responses
        template = responses[0] if len(responses) == 1 else responses[session.rng.randrange(len(responses))]

        def substitute(match):
            return render_value(session.store.get(match.group(1), match.group(2)))

        return PLACEHOLDER_RE.sub(substitute, template)

    def _traverse(self, session: Session, ctx: _TurnContext, start: NodeKey) -> None:
        """Follow edges from ``start`` until the next input pause or the end
        of the session.  All error paths route through the Error action."""
        key: Optional[NodeKey] = start
        while key is not None and not session.ended:
            ctx.visits += 1
            if ctx.visits > MAX_VISITS_PER_TURN:
                key = self._handle_error(
                    session, ctx, f"turn exceeded {MAX_VISITS_PER_TURN} node visits"
                )
                continue

            dialogue = self.bundle.dialogue(key[0])
            node = dialogue.node(key[1]) if dialogue else None
            if node is None:
                key = self._handle_error(session, ctx, f"unknown node {node_key_str(key)}")
                continue
            ctx.traversed.append(key)
            kind = node.kind

            if kind == "UserInput":
                session.awaiting = key
                return

            if kind == "Exit":
                key = self._handle_exit(session, ctx)
                continue

            if kind == "Speech":
                text = self._render_speech(session, node)
                ctx.responses.append(text)
                session.history.append(("bot", text))
                if node.payload.nrg_grounding:
                    key = self._start_grounding_exchange(session, ctx, dialogue, node, text)
                    return
                key = self._follow_single_edge(session, ctx, dialogue, node)
                continue

            if kind == "Function":
                key = self._run_function(session, ctx, dialogue, node)
                continue

            if kind == "SubDialogueRef":
                child = self.bundle.dialogue(node.payload.dialogue_id)
                if child is None:
                    key = self._handle_error(
                        session, ctx, f"reference to unknown sub-dialogue {node.payload.dialogue_id!r}"
                    )
                    continue
                edge = dialogue.out_edge(node.id)
                return_node = (dialogue.id, edge.to_id) if edge else None
                session.stack.append(Frame(child.id, return_node))
                self._note_dialogue_entered(session, child)
                key = (child.id, child.enter_node.id)
                continue

            # Enter, Intent, GlobalIntent, Action, GlobalAction: pass through.
            key = self._follow_single_edge(session, ctx, dialogue, node)

    def _follow_single_edge(self, session, ctx, dialogue, node) -> Optional[NodeKey]:
        edge = dialogue.out_edge(node.id)
        if edge is None:
            return self._handle_error(
                session, ctx, f"node {dialogue.id}/{node.id} has no outgoing edge"
            )
        return (dialogue.id, edge.to_id)

    def _start_grounding_exchange(self, session, ctx, dialogue, node, grounding_text) -> None:
        response = self.generator.generate(
            NrgRequest(tuple(session.history), ACT_QUESTION, grounding_text=grounding_text)
        )
        ctx.responses.append(response.text)
        session.history.append(("bot", response.text))
        ctx.nrg_used = {"act": response.act, "fallback": response.fallback}
        edge = dialogue.out_edge(node.id)
        resume = (dialogue.id, edge.to_id) if edge else None
        session.nrg_pending = NrgPending(mode="grounding", resume=resume)
        session.awaiting = None
        return None

    def _run_function(self, session, ctx, dialogue, node) -> Optional[NodeKey]:
        payload = node.payload
        for assignment in payload.assignments:
            try:
                value = eval_condition(assignment.expr, session.store)
            except EvalError as err:
                return self._handle_error(
                    session, ctx, f"assignment in {dialogue.id}/{node.id} failed: {err}"
                )
            try:
                self._write_attribute(session, ctx, assignment.target.scope, assignment.target.name, value)
            except UndeclaredAttributeError as err:
                return self._handle_error(session, ctx, str(err))
        for transition in payload.transitions:
            try:
                verdict = eval_condition(transition.guard, session.store)
            except EvalError as err:
                return self._handle_error(
                    session, ctx, f"guard in {dialogue.id}/{node.id} failed: {err}"
                )
            if verdict is True:
                edge = dialogue.out_edge(node.id, transition.out_key)
                if edge is None:
                    return self._handle_error(
                        session, ctx,
                        f"function {dialogue.id}/{node.id} has no edge {transition.out_key!r}",
                    )
                return (dialogue.id, edge.to_id)
        return self._handle_error(
            session, ctx, f"function {dialogue.id}/{node.id}: no transition guard matched"
        )

    def _handle_exit(self, session: Session, ctx: _TurnContext) -> Optional[NodeKey]:
        if len(session.stack) <= 1:
            self._end_session(session, "main-exit")
            return None
        frame = session.stack.pop()
        if frame.return_node is not None:
            return frame.return_node
        selected = select_dialogue(
            self.bundle,
            list(self.bundle.selector_pool),
            session.discussed_labels,
            session.discussed_entities,
            session.store,
        )
        if selected is None:
            self._end_session(session, "no-eligible-dialogue")
            return None
        child = self.bundle.dialogue(selected)
        session.stack.append(Frame(child.id, None))
        self._note_dialogue_entered(session, child)
        return (child.id, child.enter_node.id)

    # -- records -------------------------------------------------------------

    def _result(self, session, ctx, raw, masked, spans, routing, skimmer_writes, started) -> TurnResult:
        record = self._finish_turn(
            session, ctx,
            raw_utterance=raw,
            masked_utterance=masked,
            spans=spans,
            routing=routing,
            skimmer_writes=skimmer_writes,
            started=started,
        )
        return TurnResult(ctx.responses, session.ended, record)

    def _finish_turn(
        self,
        session: Session,
        ctx: _TurnContext,
        raw_utterance: str,
        started: float,
        masked_utterance: str = "",
        spans=(),
        routing=None,
        skimmer_writes=(),
    ) -> TurnRecord:
        record = TurnRecord(
            session_id=session.session_id,
            turn_index=session.turn_index,
            at=self._now_iso(),
            raw_utterance=raw_utterance,
            entities=[span_to_dict(s) for s in spans],
            masked_utterance=masked_utterance,
            routing=routing.to_dict() if routing else None,
            skimmer_writes=list(skimmer_writes),
            traversed_nodes=[node_key_str(k) for k in ctx.traversed],
            responses=list(ctx.responses),
            attribute_diff=list(ctx.attribute_diff),
            nrg_used=ctx.nrg_used,
            duration_ms=(self.clock() - started) * 1000.0,
            error=ctx.error,
        )
        self.store.append_turn(record)
        return record
