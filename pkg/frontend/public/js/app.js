// Dashboard entry point: experimenter view (roster, timeline, condition
// switch, metrics) and parent demo view (pending prompts with countdowns,
// survey forms). Poll-based; all state lives server-side.
import { ApiError, StudyApi } from "./api.js";
import { clockLabel, countdown } from "./format.js";
import { canonicalize, fieldsFor, FormError } from "./forms.js";
import { renderForm, renderMetrics, renderPendingList, renderRoster, renderTimeline, } from "./views.js";
const POLL_MS = 5000;
const COUNTDOWN_MS = 1000;
const api = new StudyApi();
const state = {
    selectedId: null,
    instruments: null,
    nowMs: 0,
    clockSkew: 0,
    pendingEvents: [],
    openFormEventId: null,
};
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing #${id}`);
    return node;
}
function flash(message, isError) {
    const bar = el("statusbar");
    bar.textContent = message;
    bar.className = isError ? "error" : "info";
    setTimeout(() => {
        if (bar.textContent === message)
            bar.textContent = "";
    }, 6000);
}
function surfaced(e) {
    if (e instanceof ApiError)
        return `server: ${e.message} (${e.status})`;
    return String(e);
}
// ---- polling ---------------------------------------------------------------
async function refresh() {
    try {
        const clock = await api.clock();
        state.nowMs = clock.now_ms;
        state.clockSkew = clock.now_ms - Date.now();
        el("clock").textContent = `${clock.mode} clock ${clockLabel(clock.now_ms)}`;
        const roster = await api.roster();
        if (state.selectedId === null && roster.length > 0) {
            state.selectedId = roster[0].id;
        }
        el("roster").innerHTML = renderRoster(roster, state.nowMs, state.selectedId);
        el("metrics").innerHTML = renderMetrics(await api.metrics());
        if (state.selectedId !== null) {
            el("timeline").innerHTML = renderTimeline(await api.timeline(state.selectedId));
            state.pendingEvents = await api.pending(state.selectedId);
            if (state.openFormEventId === null) {
                el("pending").innerHTML = renderPendingList(state.pendingEvents, state.nowMs);
            }
        }
    }
    catch (e) {
        flash(surfaced(e), true);
    }
}
function tickCountdowns() {
    const now = Date.now() + state.clockSkew;
    document.querySelectorAll(".countdown").forEach((span) => {
        const expires = Number(span.dataset.expires);
        span.textContent = countdown(now, expires);
        span.classList.toggle("urgent", expires - now < 5 * 60000);
    });
}
// ---- experimenter actions --------------------------------------------------
async function onRegister(ev) {
    ev.preventDefault();
    const alias = el("reg-alias").value.trim();
    const offset = Number(el("reg-offset").value || "0");
    try {
        const p = await api.register(alias, offset);
        state.selectedId = p.id;
        flash(`registered ${p.id} (${p.alias}), block ${p.assignment_block}`, false);
        el("reg-alias").value = "";
        await refresh();
    }
    catch (e) {
        flash(surfaced(e), true);
    }
}
async function onSwitchCondition(ev) {
    ev.preventDefault();
    if (state.selectedId === null)
        return;
    const condition = el("switch-condition").value;
    try {
        // effective on the next whole minute; the server rejects retroactive times
        const effective = (Math.floor(state.nowMs / 60000) + 1) * 60000;
        await api.switchCondition(state.selectedId, condition, effective);
        flash(`switching ${state.selectedId} to ${condition}`, false);
        await refresh();
    }
    catch (e) {
        flash(surfaced(e), true);
    }
}
async function onFitModels() {
    try {
        const r = await api.fitModels();
        flash(`fitted ${r.scopes.length} model(s) from ${r.n_labels} labels`, false);
        await refresh();
    }
    catch (e) {
        flash(surfaced(e), true);
    }
}
function onRosterClick(ev) {
    const row = ev.target.closest("tr[data-pid]");
    if (!row)
        return;
    state.selectedId = row.dataset.pid ?? null;
    state.openFormEventId = null;
    void refresh();
}
// ---- parent view -----------------------------------------------------------
async function openForm(eventId, kind) {
    if (state.instruments === null) {
        state.instruments = await api.instruments();
    }
    const fields = fieldsFor(kind, state.instruments[kind]);
    state.openFormEventId = eventId;
    el("pending").innerHTML = renderForm(kind, fields);
}
async function onSubmitForm(form) {
    const kind = form.dataset.kind ?? "";
    const eventId = state.openFormEventId;
    if (eventId === null || state.instruments === null)
        return;
    const fields = fieldsFor(kind, state.instruments[kind]);
    const raw = {};
    new FormData(form).forEach((v, k) => {
        raw[k] = String(v);
    });
    const errBox = form.querySelector(".form-error");
    try {
        const items = canonicalize(fields, raw);
        await api.submitResponse(eventId, items);
        state.openFormEventId = null;
        flash("response recorded", false);
        await refresh();
    }
    catch (e) {
        errBox.hidden = false;
        if (e instanceof FormError) {
            errBox.textContent = `${e.field}: ${e.message}`;
        }
        else {
            // expired/conflict rejections come back verbatim from the server
            errBox.textContent = surfaced(e);
        }
    }
}
function onPendingClick(ev) {
    const target = ev.target;
    if (target.classList.contains("open-form")) {
        const card = target.closest(".prompt-card");
        void openForm(card.dataset.eid, card.dataset.kind);
    }
}
// ---- wiring ----------------------------------------------------------------
export function mount() {
    el("register-form").addEventListener("submit", onRegister);
    el("switch-form").addEventListener("submit", onSwitchCondition);
    el("fit-button").addEventListener("click", () => void onFitModels());
    el("roster").addEventListener("click", onRosterClick);
    el("pending").addEventListener("click", onPendingClick);
    el("pending").addEventListener("submit", (ev) => {
        ev.preventDefault();
        void onSubmitForm(ev.target);
    });
    void refresh();
    setInterval(() => void refresh(), POLL_MS);
    setInterval(tickCountdowns, COUNTDOWN_MS);
}
if (typeof document !== "undefined" && document.getElementById("roster")) {
    mount();
}
