import { ApiClient, ApiError } from "./api.js";
import type { Coordinates, SosAlert } from "./types.js";

export type GeoProvider = () => Promise<Coordinates>;

export interface SosUi {
  showConfirmation(alert: SosAlert): void;
  showManualForm(): void;
  gotoContacts(): void;
  showError(message: string): void;
}

export type SosOutcome = "sent" | "manual-entry" | "no-contacts" | "error";

/** One button, one POST: grab coordinates (or fall back to manual entry),
 * fan the alert out, show per-contact delivery statuses. */
export async function runSosFlow(
  api: ApiClient,
  provider: GeoProvider,
  ui: SosUi,
): Promise<SosOutcome> {
  let coords: Coordinates;
  try {
    coords = await provider();
  } catch {
    ui.showManualForm();
    return "manual-entry";
  }
  return submitSos(api, coords, ui);
}

export async function submitSos(
  api: ApiClient,
  coords: Coordinates,
  ui: SosUi,
): Promise<SosOutcome> {
  try {
    const alert = await api.sos(coords.lat, coords.lon);
    ui.showConfirmation(alert);
    return "sent";
  } catch (error) {
    if (error instanceof ApiError && error.code === "NoContactsSet") {
      ui.gotoContacts();
      return "no-contacts";
    }
    ui.showError(error instanceof Error ? error.message : "SOS failed");
    return "error";
  }
}

/** Wraps browser geolocation into the provider port. */
export function browserGeoProvider(geolocation: Geolocation): GeoProvider {
  return () =>
    new Promise<Coordinates>((resolve, reject) => {
      geolocation.getCurrentPosition(
        (position) => resolve({ lat: position.coords.latitude, lon: position.coords.longitude }),
        (error) => reject(error),
        { enableHighAccuracy: true, timeout: 10_000 },
      );
    });
}
