// Browser entry point: chat view plus the inspector panel.

import { createSession, SessionClient, SocketLike } from "./client.js";
import { buildInspectorModel } from "./inspector.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function boot(): Promise<void> {
  const baseUrl = window.location.origin;
  const messages = el<HTMLDivElement>("messages");
  const input = el<HTMLInputElement>("turn-input");
  const sendButton = el<HTMLButtonElement>("send-button");
  const banner = el<HTMLDivElement>("banner");
  const retryButton = el<HTMLButtonElement>("retry-button");
  const inspector = el<HTMLDivElement>("inspector");

  let client: SessionClient;
  try {
    const session = await createSession(baseUrl, (url, init) => fetch(url, init as RequestInit));
    client = new SessionClient(
      baseUrl,
      session.sessionId,
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
  } catch (err) {
    banner.textContent = `Cannot reach the gateway: ${err}`;
    banner.classList.add("error");
    retryButton.hidden = false;
    retryButton.onclick = () => window.location.reload();
    return;
  }

  function renderTurns(): void {
    messages.replaceChildren();
    for (const turn of client.turns) {
      const bubble = document.createElement("div");
      bubble.className = `bubble ${turn.speaker}`;
      bubble.textContent = turn.text;
      messages.appendChild(bubble);
    }
    messages.scrollTop = messages.scrollHeight;
  }

  function renderInspector(): void {
    const debug = client.latestDebug;
    inspector.replaceChildren();
    if (!debug) {
      inspector.textContent = "No turn inspected yet.";
      return;
    }
    const model = buildInspectorModel(debug);
    const head = document.createElement("div");
    head.className = "inspector-head";
    head.textContent =
      `turn ${model.turnIndex} · user act ${model.userAct} · ${model.decisionSummary}` +
      `${model.mustAnswer ? " · must answer" : ""} · ${model.latencyDisplay}`;
    inspector.appendChild(head);

    const table = document.createElement("table");
    const header = table.insertRow();
    for (const column of ["#", "score", "source", "relation", "candidate"]) {
      const cell = document.createElement("th");
      cell.textContent = column;
      header.appendChild(cell);
    }
    for (const row of model.candidates) {
      const tr = table.insertRow();
      for (const value of [String(row.rank), row.scoreDisplay, row.source, row.relation, row.text]) {
        tr.insertCell().textContent = value;
      }
    }
    inspector.appendChild(table);

    const salience = document.createElement("div");
    salience.className = "salience";
    salience.textContent =
      "salience: " +
      (model.salience.map((s) => `${s.entityId}@${s.lastMentionTurn}`).join(", ") || "(empty)");
    inspector.appendChild(salience);
  }

  function render(): void {
    renderTurns();
    renderInspector();
    input.disabled = client.busy || client.status !== "connected";
    sendButton.disabled = input.disabled || !input.value.trim();
    if (client.status === "error") {
      banner.textContent = client.lastError ?? "connection lost";
      banner.classList.add("error");
      retryButton.hidden = false;
    } else {
      banner.textContent = client.status === "connected" ? "connected" : client.status;
      banner.classList.remove("error");
      retryButton.hidden = client.status !== "closed";
    }
  }

  client.onUpdate(render);
  retryButton.onclick = () => client.reconnect();
  sendButton.onclick = () => {
    client.sendTurn(input.value);
    input.value = "";
    render();
  };
  input.oninput = render;
  input.onkeydown = (ev) => {
    if (ev.key === "Enter" && !sendButton.disabled) {
      sendButton.click();
    }
  };

  client.connect();
  render();
}

boot();
