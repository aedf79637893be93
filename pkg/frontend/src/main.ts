import { GatewayClient, sessionTokenStore } from "./api";
import { createConsole, type Route } from "./app";
import "./style.css";

function routeFromHash(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter((p) => p !== "");
  if (parts[0] === "checkpoints" && parts[1]) {
    return { view: "review", checkpointId: parts[1] };
  }
  if (parts[0] === "runs" && parts[1] && parts[2] === "allocation") {
    return { view: "allocation", runId: parts[1] };
  }
  if (parts[0] === "runs" && parts[1]) {
    return { view: "run", runId: parts[1] };
  }
  if (parts[0] === "runs") {
    return { view: "runs" };
  }
  return { view: "queue" };
}

function hashFromRoute(route: Route): string {
  switch (route.view) {
    case "queue":
      return "#/";
    case "review":
      return `#/checkpoints/${route.checkpointId}`;
    case "runs":
      return "#/runs";
    case "run":
      return `#/runs/${route.runId}`;
    case "allocation":
      return `#/runs/${route.runId}/allocation`;
  }
}

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

const client = new GatewayClient(sessionTokenStore(window.sessionStorage));
const app = createConsole(root, client, {
  onRouteChange: (route) => {
    const hash = hashFromRoute(route);
    if (window.location.hash !== hash) window.location.hash = hash;
  },
});

window.addEventListener("hashchange", () => {
  const route = routeFromHash(window.location.hash);
  if (JSON.stringify(route) !== JSON.stringify(app.currentRoute())) {
    void app.navigate(route);
  }
});

void app.refresh().then(() => app.navigate(routeFromHash(window.location.hash)));
app.start();
