// Queue pane: guided triage of flagged same-as candidates. One pair at a
// time; the next pair appears only after the service acknowledged the
// decision (no optimistic updates anywhere).

import type { QueueItem } from "./api.js";

export interface QueueHandlers {
  onDecide(item: QueueItem, accept: boolean): void;
}

export function renderQueue(
  container: HTMLElement,
  queue: QueueItem[],
  cursor: number,
  busy: boolean,
  handlers: QueueHandlers,
): void {
  container.textContent = "";
  const heading = document.createElement("h2");
  heading.textContent = `same-as review (${queue.length} pending)`;
  container.appendChild(heading);

  if (queue.length === 0) {
    const done = document.createElement("p");
    done.className = "empty-state";
    done.id = "queue-empty";
    done.textContent = "Queue clear: every flagged equivalence is resolved.";
    container.appendChild(done);
    return;
  }

  const item = queue[Math.min(cursor, queue.length - 1)];
  const card = document.createElement("div");
  card.className = "queue-card";
  card.dataset.pair = `${item.label_a}\t${item.label_b}`;

  const pair = document.createElement("p");
  pair.className = "queue-pair";
  pair.textContent = `"${item.label_a}"  ~  "${item.label_b}"`;
  card.appendChild(pair);

  const evidence = document.createElement("p");
  evidence.className = "queue-evidence";
  const sim = item.similarity === null ? "n/a" : item.similarity.toFixed(4);
  evidence.textContent = `acronym match: ${item.acronym_ok ? "yes" : "no"} · similarity: ${sim}`;
  card.appendChild(evidence);

  const accept = document.createElement("button");
  accept.id = "queue-accept";
  accept.textContent = "accept equivalence";
  accept.disabled = busy;
  accept.onclick = () => handlers.onDecide(item, true);
  card.appendChild(accept);

  const reject = document.createElement("button");
  reject.id = "queue-reject";
  reject.textContent = "reject";
  reject.disabled = busy;
  reject.onclick = () => handlers.onDecide(item, false);
  card.appendChild(reject);

  const error = document.createElement("p");
  error.id = "queue-error";
  error.className = "edit-error";
  card.appendChild(error);

  container.appendChild(card);
}

export function showQueueError(container: HTMLElement, message: string): void {
  const error = container.querySelector<HTMLElement>("#queue-error");
  if (error) error.textContent = message;
}
