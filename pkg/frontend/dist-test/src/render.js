// DOM rendering: state in, elements out. Values land in textContent, so
// whatever the state carries is shown byte for byte.
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
export function renderChat(container, state, onSelect) {
    container.replaceChildren();
    for (const message of state.messages) {
        const bubble = el("div", `msg ${message.speaker}`, message.text);
        bubble.dataset.turn = String(message.turnIndex);
        if (state.selectedTurn === message.turnIndex)
            bubble.classList.add("selected");
        bubble.addEventListener("click", () => onSelect(message.turnIndex));
        container.appendChild(bubble);
    }
    container.scrollTop = container.scrollHeight;
}
export function renderStatus(banner, state) {
    if (state.retryPrompt) {
        banner.textContent = state.retryPrompt;
        banner.className = "banner warn";
    }
    else if (state.ended) {
        banner.textContent = "Session ended.";
        banner.className = "banner done";
    }
    else if (state.pending) {
        banner.textContent = "…";
        banner.className = "banner";
    }
    else {
        banner.textContent = "";
        banner.className = "banner hidden";
    }
}
const PANEL_ROWS = [
    ["turn", "turnIndex"],
    ["utterance", "rawUtterance"],
    ["masked", "maskedUtterance"],
    ["scope", "scope"],
    ["best local sim", "bestLocalSim"],
    ["best global sim", "bestGlobalSim"],
    ["chosen intent", "chosenIntent"],
    ["confidence", "confidence"],
    ["generator", "nrg"],
    ["error", "error"],
    ["duration ms", "durationMs"],
];
export function renderInspection(container, panel) {
    container.replaceChildren();
    if (panel === null) {
        container.appendChild(el("div", "hint", "Select a message to inspect its turn."));
        return;
    }
    const table = el("table", "annotations");
    for (const [label, key] of PANEL_ROWS) {
        const value = panel[key];
        if (typeof value !== "string" || value === "")
            continue;
        const row = el("tr");
        row.appendChild(el("th", undefined, label));
        const cell = el("td");
        cell.dataset.field = key;
        cell.textContent = value;
        row.appendChild(cell);
        table.appendChild(row);
    }
    container.appendChild(table);
    const lists = [
        ["traversed nodes", panel.nodePath],
        ["entities", panel.entities],
        ["skimmer writes", panel.skimmerWrites],
        ["responses", panel.responses],
    ];
    for (const [title, items] of lists) {
        if (items.length === 0)
            continue;
        container.appendChild(el("h4", undefined, title));
        const ul = el("ul", `list-${title.replace(/\s+/g, "-")}`);
        for (const item of items) {
            ul.appendChild(el("li", undefined, item));
        }
        container.appendChild(ul);
    }
}
export function renderMetrics(container, view) {
    container.replaceChildren();
    if (view.emptyMessage !== null) {
        container.appendChild(el("div", "hint", view.emptyMessage));
        return;
    }
    const chart = el("div", "chart");
    for (const bar of view.bars) {
        const row = el("div", "bar-row");
        row.appendChild(el("span", "bar-label", bar.label));
        const track = el("div", "bar-track");
        const fill = el("div", "bar-fill");
        fill.style.width = `${view.maxValue > 0 ? (bar.value / view.maxValue) * 100 : 0}%`;
        track.appendChild(fill);
        row.appendChild(track);
        row.appendChild(el("span", "bar-value", bar.valueText));
        chart.appendChild(row);
    }
    container.appendChild(chart);
}
