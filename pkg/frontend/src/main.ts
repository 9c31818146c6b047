/** Entry point: picks the subject or operator view from the page URL.
 *
 *   ?game=g1&subject=tok42        subject session
 *   ?game=g1&role=operator        operator dashboard
 *   &api=http://host:port         service base (defaults to the page origin)
 */

import { ServiceClient } from "./api.js";
import { OperatorDashboard } from "./operator.js";
import { SubjectSessionView } from "./subject.js";

export function bootstrap(root: HTMLElement, search: string, origin: string): void {
  const params = new URLSearchParams(search);
  const gameId = params.get("game");
  const base = params.get("api") ?? origin;
  if (!gameId) {
    root.textContent = "missing ?game= parameter";
    return;
  }
  const client = new ServiceClient(base);
  if (params.get("role") === "operator") {
    void new OperatorDashboard(root, client, gameId).mount();
    return;
  }
  const subjectId = params.get("subject");
  if (!subjectId) {
    root.textContent = "missing ?subject= parameter";
    return;
  }
  void new SubjectSessionView(root, client, gameId, subjectId).mount();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap(document.getElementById("app")!, window.location.search, window.location.origin);
}
