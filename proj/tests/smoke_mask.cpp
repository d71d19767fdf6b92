#include "scsi/experiments.hpp"

#include <doctest.h>

#include <filesystem>

using namespace scsi;
namespace fs = std::filesystem;

TEST_CASE("random mask with latent conditioning restores two moons") {
    const fs::path dir = fs::temp_directory_path() / "scsi_smoke_mask";
    fs::remove_all(dir);
    const RunSummary r = cmd_run(SCSI_CONFIG_DIR "/twomoon_mask.ini",
                                 {"out=" + dir.string(), "eval.checkpoints=false"});
    MESSAGE("W2 " << r.final_w2);
    CHECK(!r.diverged);
    CHECK(r.final_w2 < 0.15);
}
