// HTML renderers for both roles. Pure string builders so they can be tested
// without a DOM; app.ts owns mounting and event wiring.
import { batteryClass, conditionLabel, connectivityClass, countdown, kindTitle, ratePct, stateClass, } from "./format.js";
function esc(s) {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
export function renderRoster(roster, nowMs, selectedId) {
    if (roster.length === 0) {
        return '<p class="empty">No participants registered yet.</p>';
    }
    const rows = roster
        .map((p) => {
        const d = p.device;
        const battery = d.battery_pct === null ? "?" : `${d.battery_pct}%`;
        const sel = p.id === selectedId ? ' class="selected"' : "";
        return (`<tr data-pid="${esc(p.id)}"${sel}>` +
            `<td>${esc(p.id)}</td><td>${esc(p.alias)}</td>` +
            `<td>day ${p.study_day ?? "-"}</td>` +
            `<td>${esc(conditionLabel(p.condition_now))}</td>` +
            `<td><span class="badge ${batteryClass(d.battery_pct)}">${battery}</span>` +
            ` <span class="badge ${connectivityClass(nowMs, d.last_seen_ms)}">` +
            `${d.recording ? "rec" : "stopped"}</span></td>` +
            `<td>${p.n_labels}</td></tr>`);
    })
        .join("");
    return ("<table><thead><tr><th>ID</th><th>Alias</th><th>Day</th><th>Condition</th>" +
        "<th>Device</th><th>Labels</th></tr></thead>" +
        `<tbody>${rows}</tbody></table>`);
}
export function renderTimeline(events) {
    if (events.length === 0)
        return '<p class="empty">No prompts yet.</p>';
    const chips = events
        .map((e) => {
        const tag = e.trigger === "calm_trigger" ? " calm" : "";
        const pred = e.predicted === null ? "" : ` (pred ${e.predicted.toFixed(2)})`;
        return (`<li class="${stateClass(e.state)}" title="${esc(e.id)}">` +
            `${esc(kindTitle(e.kind))}${tag}${pred} — ${e.state}</li>`);
    })
        .join("");
    return `<ul class="timeline">${chips}</ul>`;
}
const CONDITIONS = ["none", "hourly", "random", "calm_only"];
const KIND_ROWS = [
    ["intraday", "Intraday"],
    ["end_of_day", "End-of-day"],
    ["end_of_week", "End-of-week"],
];
// Conditions as columns, survey kinds as rows — same layout as the CLI report.
export function renderMetrics(metrics) {
    const head = CONDITIONS.map((c) => `<th>${conditionLabel(c)}</th>`).join("");
    const body = KIND_ROWS.map(([kind, label]) => {
        const cells = CONDITIONS.map((c) => {
            const m = metrics[c];
            const km = m[kind];
            return `<td>${km.answered}/${km.sent} (${ratePct(km.rate_pct)})</td>`;
        }).join("");
        return `<tr><td>${label}</td>${cells}</tr>`;
    }).join("");
    const calmCells = CONDITIONS.map((c) => {
        const m = metrics[c];
        return `<td>${ratePct(m.calm_ratio_pct)}</td>`;
    }).join("");
    return (`<table><thead><tr><th></th>${head}</tr></thead><tbody>${body}` +
        `<tr><td>Calm ratio</td>${calmCells}</tr></tbody></table>`);
}
export function renderPendingList(events, nowMs) {
    const open = events.filter((e) => e.state === "pending");
    if (open.length === 0)
        return '<p class="empty">Nothing to answer right now.</p>';
    return open
        .map((e) => `<div class="prompt-card" data-eid="${esc(e.id)}" data-kind="${esc(e.kind)}">` +
        `<strong>${esc(kindTitle(e.kind))}</strong>` +
        `<span class="countdown" data-expires="${e.expires_at_ms}">` +
        `${countdown(nowMs, e.expires_at_ms)}</span>` +
        `<button class="open-form">Answer</button></div>`)
        .join("");
}
export function renderForm(kind, fields) {
    const controls = fields
        .map((f) => {
        if (f.kind === "text") {
            return (`<label>${esc(f.label)}` +
                `<textarea name="${esc(f.name)}" rows="2"></textarea></label>`);
        }
        if (f.kind === "bool") {
            return (`<fieldset><legend>${esc(f.label)}</legend>` +
                `<label><input type="radio" name="${esc(f.name)}" value="yes"> Yes</label>` +
                `<label><input type="radio" name="${esc(f.name)}" value="no"> No</label>` +
                `</fieldset>`);
        }
        const lo = f.lo ?? 1;
        const hi = f.hi ?? 5;
        const points = [];
        for (let v = lo; v <= hi; v++) {
            const title = f.scale ? esc(f.scale[v - lo]) : String(v);
            points.push(`<label title="${title}">` +
                `<input type="radio" name="${esc(f.name)}" value="${v}"> ${v}</label>`);
        }
        const ends = f.scale
            ? `<div class="scale-ends"><span>${esc(f.scale[0])}</span>` +
                `<span>${esc(f.scale[f.scale.length - 1])}</span></div>`
            : "";
        return `<fieldset><legend>${esc(f.label)}</legend>${points.join("")}${ends}</fieldset>`;
    })
        .join("");
    return (`<form class="survey" data-kind="${esc(kind)}">${controls}` +
        `<div class="form-error" hidden></div>` +
        `<button type="submit">Submit</button></form>`);
}
