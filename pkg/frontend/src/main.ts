/** Browser bootstrap: the app is served by the annotation service at /app,
 * so API calls go to the same origin. A worker id can be pinned with
 * ?worker=...; otherwise one is requested from the service and kept in
 * session storage.
 */

import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const params = new URLSearchParams(window.location.search);
const app = new AnnotationApp(root, new ApiClient(""), window.sessionStorage);
void app.start(params.get("worker") ?? undefined).catch((error) => {
  root.textContent = `Could not reach the annotation service: ${error}`;
});
